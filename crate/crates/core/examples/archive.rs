// Writing a graph to the JSON-lines archive format and reading it back.

use hetlink::io::{generate_synthetic, load_graph, save_graph, Preset, EDGES_FILE, NODES_FILE, SCHEMA_FILE};

pub fn run_example() -> hetlink::Result<()> {
    let g = generate_synthetic(&Preset::LioLike.spec(1))?;
    let dir = std::env::temp_dir().join(format!("hetlink-archive-{}", std::process::id()));
    save_graph(&g, &dir)?;
    for f in [SCHEMA_FILE, NODES_FILE, EDGES_FILE] {
        let text = std::fs::read_to_string(dir.join(f)).map_err(|e| hetlink::Error::io(&dir, e))?;
        let first = text.lines().next().unwrap_or("");
        println!("{f}: {} lines, first: {:.100}", text.lines().count(), first);
    }
    let back = load_graph(&dir)?;
    println!("round trip equal: {}", back == g);
    std::fs::remove_dir_all(&dir).map_err(|e| hetlink::Error::io(&dir, e))?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> hetlink::Result<()> {
    run_example()
}
