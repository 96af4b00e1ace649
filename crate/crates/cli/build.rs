use sha2::{Digest, Sha256};
use std::path::Path;

// Hash every Rust source and manifest of the library and the CLI so that
// artifacts can name the exact code that produced them.
fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dirs = [root.join("../core/src"), root.join("src")];
    let mut files: Vec<_> = dirs
        .iter()
        .flat_map(|d| walkdir::WalkDir::new(d).into_iter().filter_map(Result::ok))
        .filter(|e| e.path().extension().is_some_and(|x| x == "rs"))
        .map(|e| e.into_path())
        .chain([root.join("../core/Cargo.toml"), root.join("Cargo.toml")])
        .collect();
    files.sort();
    let mut h = Sha256::new();
    for f in &files {
        let rel = f.strip_prefix(root).unwrap_or(f);
        h.update(rel.to_string_lossy().as_bytes());
        h.update(std::fs::read(f).expect("readable source"));
        println!("cargo:rerun-if-changed={}", f.display());
    }
    for d in &dirs {
        println!("cargo:rerun-if-changed={}", d.display());
    }
    let digest = h.finalize();
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    println!("cargo:rustc-env=DOALL_CODE_VERSION={hex}");
}
