// Lifetime-gap threshold and the resulting binary mask, drawn as text.
//
//     cargo run --example object_mask

use topocrop::imagecore::border_modify;
use topocrop::{compute_persistence, generate_mask, select_threshold, Connectivity, GrayImage};

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let (w, h) = (24, 14);
    let mut px = vec![190u8; w * h];
    let mut paint = |top: usize, left: usize, rows: usize, cols: usize, v: u8| {
        for r in top..top + rows {
            px[r * w + left..r * w + left + cols].fill(v);
        }
    };
    paint(3, 3, 5, 6, 20); // deep lesion
    paint(6, 14, 4, 5, 35); // second lesion
    paint(2, 17, 1, 2, 175); // shallow texture, should be ignored
    paint(11, 9, 1, 1, 170);
    let img = border_modify(&GrayImage::new(w, h, px)?, 1);

    let conn = Connectivity::Four;
    let diagram = compute_persistence(&img, conn);
    let threshold = select_threshold(&diagram)?;
    let result = generate_mask(&img, conn, threshold)?;

    let mut out = format!(
        "lifetimes {:?}\nthreshold {threshold}, {} components kept\n",
        diagram.lifetimes(),
        result.selected
    );
    for r in 0..h {
        let line: String = (0..w)
            .map(|c| if result.mask.get(r, c) { '#' } else { '.' })
            .collect();
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
