// Box smoothing and border flattening, and what they do to the diagram.
//
//     cargo run --example image_modification

use topocrop::imagecore::{auto_border_band, border_modify, smooth};
use topocrop::{compute_persistence, Connectivity, GrayImage};

fn render(img: &GrayImage) -> String {
    (0..img.height())
        .map(|r| {
            let row: Vec<String> = (0..img.width())
                .map(|c| format!("{:3}", img.get(r, c)))
                .collect();
            row.join(" ") + "\n"
        })
        .collect()
}

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    // a dark object in the middle, plus a dark smudge touching the edge
    let mut rows = vec![[180u8; 12]; 10];
    for row in rows.iter_mut().take(7).skip(3) {
        row[4..8].fill(40);
    }
    rows[0][0] = 20;
    rows[1][0] = 20;
    rows[5][10] = 120;
    let img = GrayImage::from_rows(&rows)?;

    let smoothed = smooth(&img, 1);
    let band = auto_border_band(img.width(), img.height());
    let flattened = border_modify(&smoothed, band);

    let pairs = |g: &GrayImage| {
        compute_persistence(g, Connectivity::Four)
            .finite_pairs
            .len()
    };
    Ok(format!(
        "original ({} finite pairs)\n{}\nsmoothed, radius 1 ({} finite pairs)\n{}\nborder band {band} ({} finite pairs)\n{}",
        pairs(&img),
        render(&img),
        pairs(&smoothed),
        render(&smoothed),
        pairs(&flattened),
        render(&flattened),
    ))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
