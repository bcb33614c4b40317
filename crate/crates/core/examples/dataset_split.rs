// Seeded train/test split over a dataset-sized list of file names.
//
//     cargo run --example dataset_split

use topocrop::split_dataset;

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let names: Vec<String> = (0..10015)
        .map(|i| format!("ISIC_{:07}.jpg", 24306 + i))
        .collect();
    let (train, test) = split_dataset(&names, 0.9, 0);
    let again = split_dataset(&names, 0.9, 0);
    assert_eq!((&train, &test), (&again.0, &again.1));
    Ok(format!(
        "{} images -> {} train / {} test\nfirst test files: {:?}\n",
        names.len(),
        train.len(),
        test.len(),
        &test[..3]
    ))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
