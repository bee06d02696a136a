//! Regenerates the data files shipped in the repository's data/ directory.
//! Run from the workspace root: cargo run -p struxmm-core --example gen_data

use std::fs;
use std::path::Path;

use struxmm_core::builtin;
use struxmm_core::format;
use struxmm_core::shape::Shape;
use struxmm_core::structure::StructuredRestriction;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    fs::create_dir_all(root.join("profiles")).unwrap();
    for (name, dec) in builtin::all() {
        fs::write(
            root.join(format!("{name}.dec")),
            format::write_decomposition(&dec),
        )
        .unwrap();
    }
    let restrictions = [
        (
            "r222_7.rest",
            Shape::of(2, 2, 2),
            vec![(Shape::of(1, 1, 1), 7)],
        ),
        (
            "r666_137_8.rest",
            Shape::of(6, 6, 6),
            vec![(Shape::of(1, 1, 1), 137), (Shape::of(1, 1, 2), 8)],
        ),
        (
            "r666_117_18.rest",
            Shape::of(6, 6, 6),
            vec![(Shape::of(1, 1, 1), 117), (Shape::of(1, 1, 2), 18)],
        ),
        (
            "r333_15_2_1.rest",
            Shape::of(3, 3, 3),
            vec![
                (Shape::of(1, 1, 1), 15),
                (Shape::of(1, 1, 2), 2),
                (Shape::of(1, 2, 2), 1),
            ],
        ),
    ];
    for (name, base, blocks) in restrictions {
        let r = StructuredRestriction::from_blocks(base, &blocks);
        fs::write(root.join(name), format::write_restriction(&r)).unwrap();
    }
    let profiles = [
        ("standard.prof", "1 standard - -\n".to_string()),
        ("strassen_pure.prof", "2 scheme ../strassen.dec -\n1 standard - -\n".to_string()),
        ("winograd.prof", "35 scheme ../winograd.dec -\n1 standard - -\n".to_string()),
        (
            "structured666.prof",
            "10000 restriction ../r666_117_18.rest 691\n35 scheme ../winograd.dec -\n1 standard - -\n"
                .to_string(),
        ),
        (
            "struct222.prof",
            "16 plan ../standard222.dec -\n8 scheme ../winograd.dec -\n1 standard - -\n".to_string(),
        ),
    ];
    for (name, text) in profiles {
        fs::write(root.join("profiles").join(name), text).unwrap();
    }
    println!("data files written to {}", root.display());
}
