//! Compile the graph's labels into a dictionary and find entity mentions in
//! free text: longest-match scanning, inflection tolerance, incremental
//! extension, and the staleness guard.
//!
//! ```bash
//! cargo run -p lethe --example entity_extraction
//! ```

use lethe::extraction::{normalize, Dictionary, MatchKind};
use lethe::kg::{KnowledgeGraph, Thing, ThingKind};

fn main() -> lethe::Result<()> {
    let mut graph = KnowledgeGraph::new();
    graph.add_thing(Thing::new("person:ada", ThingKind::Person, "Ada Marsh"))?;
    graph.add_thing(
        Thing::new("topic:tidal-power", ThingKind::Topic, "Tidal Power")
            .with_alt_label("tidal energy"),
    )?;
    graph.add_thing(Thing::new("topic:permits", ThingKind::Topic, "Permit"))?;
    graph.add_thing(Thing::new("project:estuary", ThingKind::Project, "Estuary Study"))?;

    // normalization lowercases, strips diacritics, splits on non-alphanumerics
    println!("normalize(\"The Estuary—STUDY!\") = {:?}\n", normalize("The Estuary—STUDY!"));

    let dict = Dictionary::build(&graph);
    println!("dictionary: {} label entries\n", dict.len());

    let note = "Met Ada Marsh about the estuary study; the permits for \
                tidal power are stalled. Ada wants the permit texts reviewed.";
    println!("annotating:\n  {note}\n");
    for m in dict.annotate(note, &graph)? {
        println!(
            "  [{:>3}..{:<3}] {:<12} -> {}  ({})",
            m.start,
            m.end,
            format!("{:?}", m.text),
            m.entity,
            match m.match_kind {
                MatchKind::Exact => format!("exact, score {:.2}", m.score),
                MatchKind::Inflected => format!("inflected, score {:.2}", m.score),
            }
        );
    }

    // note: "permits" matched the label "Permit" by inflection (a trailing
    // "s"); "Ada" alone matched nothing because the label is "Ada Marsh"
    // and scanning is longest-match over whole labels.

    // a new thing appears -> the old dictionary refuses to annotate
    graph.add_thing(Thing::new("topic:grid", ThingKind::Topic, "Grid Connection"))?;
    match dict.annotate("the grid connection fee", &graph) {
        Err(e) => println!("\nafter the graph grew, the stale dictionary refuses: {e}"),
        Ok(_) => unreachable!("staleness guard must trip"),
    }

    // either rebuild, or extend in place with just the new thing
    let mut extended = dict.clone();
    let grid = lethe::kg::EntityId::from("topic:grid");
    extended.extend_with(graph.thing(&grid).expect("just added"), graph.label_version());
    let mentions = extended.annotate("the grid connection fee", &graph)?;
    println!(
        "extended dictionary finds {} mention(s): {:?}",
        mentions.len(),
        mentions.iter().map(|m| m.entity.as_str()).collect::<Vec<_>>()
    );

    Ok(())
}
