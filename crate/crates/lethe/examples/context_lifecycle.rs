//! Context spaces across their whole lifecycle: spawning from a calendar
//! entry, explicit and elicited switching, membership, hiding and waking,
//! split and merge, and the buoyancy-partitioned folder injections.
//!
//! ```bash
//! cargo run -p lethe --example context_lifecycle
//! ```

use std::collections::BTreeMap;

use lethe::activity::{ActivityEvent, EventType, ItemDescriptor, ItemRef};
use lethe::config::EngineConfig;
use lethe::context::{ContextState, Side};
use lethe::engine::{ContextDecision, Engine};
use lethe::kg::{EntityId, ThingKind};

const DAY: f64 = 86_400.0;

fn main() -> lethe::Result<()> {
    let mut cfg = EngineConfig::default();
    cfg.active_day_min_events = 1; // a single event makes a day count as worked
    let mut engine = Engine::new(cfg)?;
    let mut t = 8.0 * 3600.0;

    // the topics this desk talks about, so texts can mention them
    for (uri, label) in [
        ("topic:coral", "Coral"),
        ("topic:transects", "Transects"),
        ("topic:budget", "Budget"),
        ("topic:invoices", "Invoices"),
    ] {
        engine.ingest(
            &ActivityEvent::new(t, EventType::Create).with_descriptor(ThingKind::Topic, uri, label),
        )?;
        t += 60.0;
    }

    // 1. a calendar entry spawns a context around itself (no switch yet)
    let reef_meeting = ItemDescriptor {
        kind: ThingKind::Event,
        uri: "cal:reef-survey".into(),
        title: "Reef Survey".into(),
        start: Some(t + 3600.0),
        end: Some(t + 2.0 * 3600.0),
    };
    let summary = engine.ingest(
        &ActivityEvent::new(t, EventType::CalendarCreate)
            .with_item(ItemRef::Descriptor(reef_meeting)),
    )?;
    let reef = match summary.context_decision {
        ContextDecision::Spawned(ref ctx) => ctx.clone(),
        ref other => panic!("expected a spawn, got {other:?}"),
    };
    println!("calendar entry spawned context {reef}");
    t += 120.0;

    // 2. working *in* it: a context hint files items as user-placed members
    for (uri, title, text) in [
        ("file:transect-log.csv", "Transect Log", "coral transects, day one"),
        ("file:reef-notes.md", "Reef Notes", "coral bleaching notes from the transects"),
        ("photo:site-a.jpg", "Site A", "coral head at site A"),
    ] {
        engine.ingest(
            &ActivityEvent::new(t, EventType::Open)
                .with_descriptor(ThingKind::File, uri, title)
                .with_text(text)
                .with_hint(reef.clone()),
        )?;
        t += 300.0;
    }

    // a second desk thread, the same way
    let summary = engine.ingest(
        &ActivityEvent::new(t, EventType::CalendarCreate).with_item(ItemRef::Descriptor(
            ItemDescriptor {
                kind: ThingKind::Event,
                uri: "cal:budget-review".into(),
                title: "Budget Review".into(),
                start: Some(t + 3600.0),
                end: Some(t + 2.0 * 3600.0),
            },
        )),
    )?;
    let budget = match summary.context_decision {
        ContextDecision::Spawned(ref ctx) => ctx.clone(),
        ref other => panic!("expected a spawn, got {other:?}"),
    };
    t += 120.0;
    for (uri, title, text) in [
        ("file:q3-budget.xlsx", "Q3 Budget", "budget lines and invoices for Q3"),
        ("email:invoice-421", "Invoice 421", "unpaid invoices chased for the budget"),
    ] {
        engine.ingest(
            &ActivityEvent::new(t, EventType::Open)
                .with_descriptor(ThingKind::File, uri, title)
                .with_text(text)
                .with_hint(budget.clone()),
        )?;
        t += 300.0;
    }
    println!("current context after budget work: {:?}", engine.contexts().current());

    // 3. elicitation: no hint, but the text gives the thread away
    let summary = engine.ingest(
        &ActivityEvent::new(t, EventType::Open)
            .with_descriptor(ThingKind::File, "file:site-b.jpg", "Site B")
            .with_text("more coral transects, site B this time"),
    )?;
    println!("hint-less coral event decided: {:?}", summary.context_decision);
    t += 300.0;

    let space = engine.contexts().context(&reef).expect("reef context exists");
    println!(
        "\n{reef}: state {}, {} members, about {:?}",
        space.state.as_str(),
        space.members.len(),
        space.is_about.iter().map(EntityId::as_str).collect::<Vec<_>>()
    );

    // 4. lifecycle: the budget thread goes dormant, then comes back
    engine.set_context_state(&budget, ContextState::Hidden)?;
    println!(
        "\nhid {budget}: state {}",
        engine.contexts().context(&budget).expect("exists").state.as_str()
    );
    engine.set_context_state(&budget, ContextState::Active)?;
    println!(
        "woke {budget}: state {}",
        engine.contexts().context(&budget).expect("exists").state.as_str()
    );

    // 5. two weeks of unrelated admin work; every day is an active day, so
    //    the reef material sinks while nobody touches it
    for day in 1..=14 {
        engine.ingest(
            &ActivityEvent::new(t + day as f64 * DAY, EventType::Write)
                .with_descriptor(ThingKind::Note, "note:admin-journal", "Admin Journal")
                .with_text("timesheets and travel receipts")
                .with_hint(budget.clone()),
        )?;
    }
    t += 14.0 * DAY + 3600.0;
    // one quick look back at the notes keeps just that file buoyant
    engine.ingest(
        &ActivityEvent::new(t, EventType::Open)
            .with_item(ItemRef::Id(EntityId::from("file:reef-notes.md")))
            .with_hint(reef.clone()),
    )?;

    let views = engine.injections(&reef)?;
    println!("\nfolder injection for {reef} after two idle weeks:");
    println!("  buoyant, shown by default:");
    for (item, mb) in &views.active {
        println!("    {item}  (mb {mb:.3})");
    }
    println!("  sunken, set apart:");
    for (item, mb) in &views.forgotten {
        println!("    {item}  (mb {mb:.3})");
    }

    // 6. reorganization: split the reef context into field data vs photos...
    let members: Vec<EntityId> = engine
        .contexts()
        .context(&reef)
        .expect("exists")
        .members
        .keys()
        .cloned()
        .collect();
    let assignment: BTreeMap<EntityId, Side> = members
        .iter()
        .map(|m| {
            let side = if m.as_str().starts_with("photo:") || m.as_str().contains("site") {
                Side::Right
            } else {
                Side::Left
            };
            (m.clone(), side)
        })
        .collect();
    let (left, right) = engine.split_context(&reef, &assignment)?;
    println!("\nsplit {reef} -> {left} + {right}");
    println!(
        "  original is now {}",
        engine.contexts().context(&reef).expect("exists").state.as_str()
    );

    // ...think better of it, and merge the halves back together
    let merged = engine.merge_contexts(&left, &right)?;
    let merged_space = engine.contexts().context(&merged).expect("exists");
    println!("merged {left} + {right} -> {merged} ({} members)", merged_space.members.len());

    // 7. the audit trail: every lifecycle step was recorded
    println!("\nlast timeline records:");
    for rec in engine.contexts().timeline().iter().rev().take(8).rev() {
        println!("  seq {:>3}  {:?}  {}  {}", rec.event_seq, rec.kind, rec.ctx, rec.detail);
    }

    // 8. buoyancy-ranked overview of all contexts
    println!("\ncontext overview (budget 3):");
    for entry in engine.overview(3) {
        println!(
            "  {}  mb {:.3}{}",
            entry.context,
            entry.mb,
            if entry.hidden_from_default { "  [past the display budget]" } else { "" }
        );
    }

    Ok(())
}
