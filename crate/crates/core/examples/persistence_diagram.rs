// Persistence diagram of a small image, checked against the
// threshold-and-flood-fill reference implementation.
//
//     cargo run --example persistence_diagram

use topocrop::{brute_force_persistence, compute_persistence, Connectivity, GrayImage};

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let img = GrayImage::from_rows(&[
        [9, 9, 9, 9, 9, 9],
        [9, 1, 9, 9, 4, 9],
        [9, 9, 6, 9, 9, 9],
        [9, 2, 9, 9, 0, 9],
        [9, 9, 9, 9, 9, 9],
    ])?;

    let mut report = String::new();
    for conn in [Connectivity::Four, Connectivity::Eight] {
        let diagram = compute_persistence(&img, conn);
        assert_eq!(
            diagram.points(),
            brute_force_persistence(&img, conn).points()
        );
        report.push_str(&format!("# connectivity {conn}\n{}", diagram.to_csv()));
    }
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
