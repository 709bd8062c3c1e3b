//! Preservation Value over a synthetic photo collection: six evidence
//! dimensions, four persona weightings, the coverage guarantee for
//! collections, and threshold calibration from user corrections.
//!
//! ```bash
//! cargo run -p lethe --example photo_preservation
//! ```

use lethe::generate::{generate_photos, PhotoProfile};
use lethe::kg::ThingKind;
use lethe::preservation::{calibrate_threshold, Decision, Persona};

fn main() -> lethe::Result<()> {
    // 400 photos over two years: some touched often, most never
    let profile = PhotoProfile {
        photos: 400,
        ..Default::default()
    };
    let engine = generate_photos(&profile, 2024)?;
    println!(
        "collection: {} things, {} edges of people/collections/series structure\n",
        engine.graph().thing_count(),
        engine.graph().edge_count()
    );

    // the same collection through four pairs of eyes
    println!("preserve rate by persona (threshold {}):", engine.config().pv_threshold);
    for persona in Persona::ALL {
        let (assessments, capsule) = engine.assess(persona, None)?;
        let photos: Vec<_> = assessments
            .iter()
            .filter(|a| {
                engine.graph().thing(&a.item).map(|t| t.kind) == Some(ThingKind::Photo)
            })
            .collect();
        let kept = photos.iter().filter(|a| a.decision == Decision::Preserve).count();
        println!(
            "  {:<12} keeps {:>3}/{} photos ({:>4.1}%), {} promoted for collection coverage",
            persona.as_str(),
            kept,
            photos.len(),
            100.0 * kept as f64 / photos.len() as f64,
            capsule.promotions.len()
        );
    }

    // under one persona, look at why individual photos were kept or not
    let (assessments, capsule) = engine.assess(Persona::SafeCurator, None)?;
    let photo_of = |a: &&lethe::preservation::PVAssessment| {
        engine.graph().thing(&a.item).map(|t| t.kind) == Some(ThingKind::Photo)
    };
    let kept = assessments
        .iter()
        .filter(photo_of)
        .filter(|a| a.decision == Decision::Preserve && !a.promoted)
        .max_by(|a, b| a.pv.total_cmp(&b.pv))
        .expect("something was kept");
    let dropped = assessments
        .iter()
        .filter(photo_of)
        .filter(|a| a.decision == Decision::Other)
        .min_by(|a, b| a.pv.total_cmp(&b.pv))
        .expect("something was left behind");

    println!("\ndimension breakdown under safe_curator:");
    println!("                 investment gravity social  popular coverage quality    pv");
    for (tag, a) in [("kept", kept), ("dropped", dropped)] {
        let d = &a.dims;
        println!(
            "  {:<8} {:<6} {:>8.3} {:>8.3} {:>7.3} {:>7.3} {:>8.3} {:>7.3}  {:>6.3}",
            tag,
            a.item.as_str().split(':').next_back().unwrap_or(""),
            d.investment,
            d.gravity,
            d.social_graph,
            d.popularity,
            d.coverage,
            d.quality,
            a.pv
        );
    }

    // the coverage guarantee: no collection may lose all of its members
    if let Some(promoted) = capsule.promotions.first() {
        let a = assessments.iter().find(|a| &a.item == promoted).expect("assessed");
        println!(
            "\npromoted for coverage: {} (pv {:.3} was below threshold, kept so its \
             collection stays represented)",
            promoted, a.pv
        );
    } else {
        println!("\nno promotions needed: every collection already kept a member");
    }

    // calibration: the user corrects a few decisions, the threshold follows.
    // say they want everything above pv 0.5 kept and the rest dropped:
    let labeled: Vec<(f64, Decision)> = assessments
        .iter()
        .filter(photo_of)
        .take(40)
        .map(|a| {
            let wish = if a.pv >= 0.5 { Decision::Preserve } else { Decision::Other };
            (a.pv, wish)
        })
        .collect();
    let suggested = calibrate_threshold(&labeled)?;
    println!(
        "\nafter 40 corrections aiming at pv>=0.5, the calibrated threshold is {suggested:.3}"
    );

    Ok(())
}
