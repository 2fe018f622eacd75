//! Regenerates the committed C header from the `extern "C"` surface, so the
//! header can never drift from the implementation.

use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("manifest dir"));
    let header = crate_dir
        .parent()
        .and_then(|p| p.parent())
        .expect("workspace root")
        .join("include/fieldguard.h");
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    cbindgen::generate(&crate_dir)
        .expect("generate C bindings")
        .write_to_file(header);
}
