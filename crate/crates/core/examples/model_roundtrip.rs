//! Model files: save, reload, and the errors a malformed file produces.

use std::path::Path;

use gmrobust::fixtures;
use gmrobust::model_io::{load_model, read_model, save_model};

fn main() -> gmrobust::Result<()> {
    let text = save_model(&fixtures::tiny_classifier())?;
    println!("{text}");
    let back = load_model(text.as_bytes())?;
    assert_eq!(save_model(&back)?, text);

    let malformed = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/malformed");
    let mut names: Vec<_> = std::fs::read_dir(&malformed)
        .expect("malformed corpus")
        .map(|e| e.expect("entry").path())
        .collect();
    names.sort();
    for path in names {
        let err = read_model(&path).expect_err("malformed file loads");
        println!("{}\n    {err}", path.file_name().unwrap().to_string_lossy());
    }
    Ok(())
}
