//! Build a small desk-scale knowledge graph by hand: typed things, weighted
//! relations, neighborhood queries, label lookup, and tombstone-deletion.
//!
//! ```bash
//! cargo run -p lethe --example knowledge_graph
//! ```

use std::collections::BTreeSet;

use lethe::kg::{Direction, EntityId, KnowledgeGraph, Predicate, Thing, ThingKind};

fn main() -> lethe::Result<()> {
    let mut graph = KnowledgeGraph::new();

    // a slice of one person's desk: a project, its people, topics, and files
    graph.add_thing(Thing::new("person:ada", ThingKind::Person, "Ada Marsh"))?;
    graph.add_thing(
        Thing::new("topic:tidal-power", ThingKind::Topic, "Tidal Power")
            .with_alt_label("tidal energy"),
    )?;
    graph.add_thing(Thing::new("topic:permits", ThingKind::Topic, "Permits"))?;
    graph.add_thing(Thing::new("project:estuary", ThingKind::Project, "Estuary Study"))?;
    graph.add_thing(Thing::new("file:survey.pdf", ThingKind::File, "Shoreline Survey"))?;
    graph.add_thing(Thing::new("file:draft.md", ThingKind::File, "Proposal Draft"))?;
    graph.add_thing(Thing::new("email:kickoff", ThingKind::Email, "Kickoff Thread"))?;

    let estuary = EntityId::from("project:estuary");
    let survey = EntityId::from("file:survey.pdf");
    let draft = EntityId::from("file:draft.md");
    let kickoff = EntityId::from("email:kickoff");

    graph.add_edge(&survey, Predicate::IsContainedIn, &estuary)?;
    graph.add_edge(&draft, Predicate::IsContainedIn, &estuary)?;
    graph.add_edge(&kickoff, Predicate::RelatedTo, &estuary)?;
    graph.add_edge(&estuary, Predicate::HasTopic, &EntityId::from("topic:tidal-power"))?;
    graph.add_edge(&draft, Predicate::HasTopic, &EntityId::from("topic:permits"))?;
    graph.add_edge(&kickoff, Predicate::AttendedBy, &EntityId::from("person:ada"))?;
    // a weaker, weighted association
    graph.add_edge_weighted(&survey, Predicate::RelatedTo, &draft, 0.4, 0.0)?;

    println!(
        "graph: {} things, {} edges\n",
        graph.thing_count(),
        graph.edge_count()
    );

    // what surrounds the project?
    println!("everything touching {estuary} (both directions):");
    for (edge, thing) in graph.neighbors(&estuary, None, Direction::Both)? {
        println!(
            "  {} --{:?}--> {}   [{} \"{}\", weight {:.1}]",
            edge.subject, edge.predicate, edge.object, thing.id, thing.primary_label, edge.weight
        );
    }

    // filtered: only containment, only incoming
    let containment = BTreeSet::from([Predicate::IsContainedIn]);
    let parts = graph.neighbors(&estuary, Some(&containment), Direction::In)?;
    println!("\nfiles filed under the project:");
    for (_, thing) in &parts {
        println!("  {} ({:?})", thing.primary_label, thing.kind);
    }

    // degree counts distinct incident (subject, predicate, object) triples
    println!("\ndegree({estuary}) = {}", graph.degree(&estuary));
    println!("degree({survey}) = {}", graph.degree(&survey));

    // adding the same triple twice is a no-op
    let before = graph.edge_count();
    graph.add_edge(&survey, Predicate::IsContainedIn, &estuary)?;
    println!(
        "\nre-adding an existing edge: edge count {} -> {} (deduplicated)",
        before,
        graph.edge_count()
    );

    // label lookup is normalized: case and diacritics do not matter
    let hits = graph.lookup_by_label("TIDAL ENERGY");
    println!("\nlookup_by_label(\"TIDAL ENERGY\") -> {hits:?}  (via the alt label)");

    // deletion tombstones: the thing stays addressable, never vanishes
    graph.tombstone(&kickoff)?;
    println!(
        "\nafter tombstoning {kickoff}: contains={}, tombstoned={}, thing count still {}",
        graph.contains(&kickoff),
        graph.is_tombstoned(&kickoff),
        graph.thing_count()
    );

    Ok(())
}
