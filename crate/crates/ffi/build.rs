fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    let header = std::path::Path::new(&crate_dir).join("include").join("bustrace.h");
    std::fs::create_dir_all(header.parent().unwrap()).unwrap();

    let config = cbindgen::Config::from_file(std::path::Path::new(&crate_dir).join("cbindgen.toml")).expect("read cbindgen.toml");
    cbindgen::Builder::new().with_crate(&crate_dir).with_config(config).generate().expect("Unable to generate C bindings").write_to_file(&header);

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
