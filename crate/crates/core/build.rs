fn main() {
    // cblas-sys declares the CBLAS symbols but does not pick a backend;
    // link the system BLAS (OpenBLAS through the alternatives mechanism,
    // which bundles CBLAS) for the zgemm hot path.
    println!("cargo:rustc-link-lib=blas");
}
