//! Forgetting-aware search over a replayed activity stream: hits ranked by
//! term frequency, every match partitioned into active vs forgotten by
//! Memory Buoyancy, coverage counts that survive visibility floors, and
//! concept-filtered lookup.
//!
//! ```bash
//! cargo run -p lethe --example forgetful_search
//! ```

use lethe::config::EngineConfig;
use lethe::generate::{generate_activity, ActivityProfile};
use lethe::kg::ThingKind;
use lethe::replay::replay_events;
use lethe::search::Partition;

fn main() -> lethe::Result<()> {
    // months of simulated desk work, replayed into a fresh engine; early
    // threads have long since sunk by the time the stream ends
    let profile = ActivityProfile {
        contexts: 5,
        events: 1500,
        ..Default::default()
    };
    let (events, _) = generate_activity(&profile, 7)?;
    let engine = replay_events(&events, EngineConfig::default())?;
    println!(
        "replayed {} events: {} things, {} items indexed\n",
        engine.events_ingested(),
        engine.graph().thing_count(),
        engine.index().item_count()
    );

    // search for the topic whose material has sunk the most: an old thread
    let (term, topic_id) = engine
        .graph()
        .things_iter()
        .filter(|t| t.kind == ThingKind::Topic)
        .map(|t| {
            let cov = engine
                .query(&t.primary_label, Vec::new(), None)
                .map(|r| r.coverage)
                .unwrap_or_default();
            (t.primary_label.clone(), t.id.clone(), (cov.forgotten_count, cov.active_count))
        })
        .max_by_key(|(_, _, counts)| *counts)
        .map(|(label, id, _)| (label, id))
        .expect("the stream created topics");

    let result = engine.query(&term, Vec::new(), None)?;
    println!(
        "query \"{term}\": {} matches ({} active, {} forgotten)",
        result.hits.len(),
        result.coverage.active_count,
        result.coverage.forgotten_count
    );
    for hit in result.hits.iter().take(6) {
        println!(
            "  {:<26} score {:>4.0}  mb {:.3}  {}",
            hit.item.as_str(),
            hit.score,
            hit.mb,
            match hit.partition {
                Partition::Active => "active",
                Partition::Forgotten => "forgotten (would be withheld by default views)",
            }
        );
    }
    if result.hits.len() > 6 {
        println!("  ... and {} more", result.hits.len() - 6);
    }

    // a visibility floor trims the hit list but never the coverage counts,
    // so the user always learns that something was withheld
    let floored = engine.query(&term, Vec::new(), Some(0.3))?;
    println!(
        "\nsame query with min_mb 0.3: {} hits shown, coverage still {}+{} -- \
         {} result(s) exist below the floor",
        floored.hits.len(),
        floored.coverage.active_count,
        floored.coverage.forgotten_count,
        result.hits.len() - floored.hits.len()
    );

    // concept filter: everything linked to the topic, no text terms at all
    let by_concept = engine.query("", vec![topic_id.clone()], None)?;
    println!(
        "\nconcept filter [{topic_id}]: {} items carry that concept",
        by_concept.hits.len()
    );

    // hits group into concept clusters per partition
    println!("\nactive-partition clusters for \"{term}\":");
    for cluster in &result.active_clusters {
        match &cluster.concept {
            Some(c) => println!("  {}: {} members", c, cluster.members.len()),
            None => println!("  (no shared concept): {} members", cluster.members.len()),
        }
    }

    Ok(())
}
