//! Thin a curved blob and extract its centreline, printed as ASCII art.
//!
//! ```sh
//! cargo run --example skeletonize_mask
//! ```

use prawn_measure::ingest::BinaryMask;
use prawn_measure::skeleton::{build_graph, longest_path_centreline, skeletonize};
use prawn_measure::synth::{ribbon_mask, CurveSpec};

fn render(width: u32, height: u32, cell: impl Fn(u32, u32) -> char) {
    for y in 0..height {
        let row: String = (0..width).map(|x| cell(x, y)).collect();
        println!("{row}");
    }
}

fn main() {
    let curve = CurveSpec::Quadratic([[6.0, 18.0], [38.0, 4.0], [70.0, 20.0]]);
    let mask: BinaryMask = ribbon_mask(&curve, 3.0, 78, 26);
    println!("mask ({} pixels):", mask.count());
    render(78, 26, |x, y| if mask.get(x, y) { '#' } else { '.' });

    let skeleton = skeletonize(&mask).expect("non-empty mask");
    let graph = build_graph(&skeleton);
    let centreline = longest_path_centreline(&graph);
    println!(
        "\nskeleton: {} pixels, {} endpoints, {} junctions",
        skeleton.len(),
        graph.endpoints.len(),
        graph.junctions.len()
    );
    println!(
        "centreline: {} pixels, pixel arc length {:.1}",
        centreline.path.len(),
        centreline.pixel_arc_length()
    );

    let on_line: std::collections::HashSet<(u32, u32)> =
        centreline.path.iter().copied().collect();
    println!("\nskeleton (o) and selected centreline (x):");
    render(78, 26, |x, y| {
        if on_line.contains(&(x, y)) {
            'x'
        } else if skeleton.contains((x, y)) {
            'o'
        } else if mask.get(x, y) {
            '.'
        } else {
            ' '
        }
    });
}
