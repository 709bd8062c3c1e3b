//! Memory Buoyancy from first principles: the two-phase decay curve,
//! evidence-style reinforcement with caps and burst dampening, spreading
//! activation into the neighborhood, and the steeper sink after finishing.
//!
//! ```bash
//! cargo run -p lethe --example memory_buoyancy
//! ```

use lethe::buoyancy::{decay_curve, spread_activation, MbEngine};
use lethe::config::EngineConfig;
use lethe::kg::{EntityId, KnowledgeGraph, Predicate, Thing, ThingKind};

const DAY: f64 = 86_400.0;

fn main() -> lethe::Result<()> {
    let cfg = EngineConfig::default();

    // 1. the decay curve itself: steep for the first week, slow afterwards,
    //    twice as fast once a thing is marked finished. tau counts *active*
    //    days -- days you actually worked -- not wall-clock days.
    println!("decay of mb=0.9 over active days (steep phase, then slow):");
    println!("  tau    ongoing   finished");
    for tau in [0.0, 1.0, 3.0, 5.0, 7.0, 10.0, 20.0, 40.0, 60.0] {
        println!(
            "  {:>4}   {:.4}    {:.4}",
            tau,
            decay_curve(0.9, tau, false, &cfg.decay),
            decay_curve(0.9, tau, true, &cfg.decay)
        );
    }

    // 2. a small neighborhood for stimulation to spread into
    let mut graph = KnowledgeGraph::new();
    graph.add_thing(Thing::new("project:estuary", ThingKind::Project, "Estuary Study"))?;
    graph.add_thing(Thing::new("file:survey.pdf", ThingKind::File, "Shoreline Survey"))?;
    graph.add_thing(Thing::new("file:draft.md", ThingKind::File, "Proposal Draft"))?;
    graph.add_thing(Thing::new("topic:tidal-power", ThingKind::Topic, "Tidal Power"))?;
    let estuary = EntityId::from("project:estuary");
    let survey = EntityId::from("file:survey.pdf");
    graph.add_edge(&survey, Predicate::IsContainedIn, &estuary)?;
    graph.add_edge(&EntityId::from("file:draft.md"), Predicate::IsContainedIn, &estuary)?;
    graph.add_edge(&estuary, Predicate::HasTopic, &EntityId::from("topic:tidal-power"))?;

    println!("\nspreading 0.30 of activation from {estuary}:");
    for (node, share) in spread_activation(&graph, &estuary, 0.30, &cfg.spread) {
        println!("  {node} receives {share:.4}");
    }

    // 3. the engine view: stimulate, watch caps and bursts, let days pass
    let mut mb = MbEngine::new(1); // one event is enough to make a day active
    let t0 = 0.0;
    mb.record_event(t0);

    let rows = mb.stimulate_with_strength(&graph, &estuary, 0.30, t0, &cfg)?;
    println!("\nfirst touch of the project (base strength 0.30):");
    for (node, value) in &rows {
        println!("  {node} -> mb {value:.4}");
    }

    // an immediate repeat lands in the burst window and counts for little
    let rows = mb.stimulate_with_strength(&graph, &estuary, 0.30, t0 + 10.0, &cfg)?;
    let (node, value) = rows.iter().find(|(n, _)| n == &estuary).expect("origin moved");
    println!("\nsame again 10 s later (burst-dampened): {node} -> mb {value:.4}");

    // working on it across several active days keeps reinforcing it
    for day in 1..=3 {
        let t = t0 + day as f64 * DAY;
        mb.record_event(t);
        mb.stimulate_with_strength(&graph, &estuary, 0.30, t, &cfg)?;
    }
    let t3 = t0 + 3.0 * DAY;
    println!(
        "\nafter touching it on three more active days: mb {:.4}",
        mb.current_mb(&estuary, t3, &cfg.decay)
    );

    // then life moves on: ten active days elsewhere, no touches
    for day in 4..=13 {
        mb.record_event(t0 + day as f64 * DAY);
    }
    let t13 = t0 + 13.0 * DAY;
    println!(
        "ten active days without touching it:  mb {:.4}",
        mb.current_mb(&estuary, t13, &cfg.decay)
    );

    // finishing makes it sink twice as fast from here on
    mb.set_finished(&estuary, t13, &cfg.decay);
    for day in 14..=23 {
        mb.record_event(t0 + day as f64 * DAY);
    }
    let t23 = t0 + 23.0 * DAY;
    println!(
        "marked finished, ten more active days: mb {:.4}",
        mb.current_mb(&estuary, t23, &cfg.decay)
    );

    // however strong the first-ever stimulation, a stranger starts at most
    // at the first-stimulation cap
    graph.add_thing(Thing::new("note:loose", ThingKind::Note, "Loose Note"))?;
    let loose = EntityId::from("note:loose");
    let fresh = mb.stimulate_with_strength(&graph, &loose, 0.9, t23, &cfg)?;
    let loose_mb = fresh.iter().find(|(n, _)| n == &loose).expect("stimulated").1;
    println!(
        "\na first-ever stimulation of 0.9 is capped at {:.1}: {loose} -> mb {loose_mb:.4}",
        cfg.stimulus.first_stimulation_cap
    );

    Ok(())
}
