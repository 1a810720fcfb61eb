use std::ffi::{CStr, CString};
use std::ptr;

use gnb_ffi::*;

fn last_error() -> String {
    let p = gnb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(gnb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn ws_graph_round_trip() {
    unsafe {
        let mut g: *mut GnbGraph = ptr::null_mut();
        assert_eq!(gnb_ws_generate(20, 4, 0.0, 1, &mut g), GnbStatus::Ok);
        assert!(gnb_last_error().is_null());
        assert_eq!(gnb_graph_num_nodes(g), 20);
        assert_eq!(gnb_graph_num_edges(g), 40);

        let mut src = vec![0usize; 40];
        let mut dst = vec![0usize; 40];
        assert_eq!(gnb_graph_edges(g, src.as_mut_ptr(), dst.as_mut_ptr(), 40), GnbStatus::Ok);
        assert!(src.iter().zip(&dst).all(|(u, v)| u < v));
        assert_eq!(
            gnb_graph_edges(g, src.as_mut_ptr(), dst.as_mut_ptr(), 39),
            GnbStatus::BufferTooSmall
        );

        let mut dist = vec![0i64; 20];
        assert_eq!(gnb_bfs_distances(g, 0, dist.as_mut_ptr(), 20), GnbStatus::Ok);
        // Ring lattice with K=4: hop distance is ceil(offset / 2).
        for (i, &d) in dist.iter().enumerate() {
            let off = i.min(20 - i) as i64;
            assert_eq!(d, (off + 1) / 2, "node {i}");
        }
        gnb_graph_free(g);
    }
}

#[test]
fn parameter_errors_carry_messages() {
    unsafe {
        let mut g: *mut GnbGraph = ptr::null_mut();
        assert_eq!(gnb_ws_generate(10, 3, 0.1, 0, &mut g), GnbStatus::Param);
        assert!(g.is_null());
        assert!(last_error().contains("parameter"));
        assert_eq!(gnb_ws_generate(10, 4, 0.1, 0, ptr::null_mut()), GnbStatus::NullPointer);
    }
}

#[test]
fn graph_from_edges_and_unreachable_nodes() {
    unsafe {
        let src = [0usize, 1];
        let dst = [1usize, 2];
        let mut g: *mut GnbGraph = ptr::null_mut();
        assert_eq!(gnb_graph_from_edges(4, src.as_ptr(), dst.as_ptr(), 2, &mut g), GnbStatus::Ok);
        let mut dist = [0i64; 4];
        assert_eq!(gnb_bfs_distances(g, 0, dist.as_mut_ptr(), 4), GnbStatus::Ok);
        assert_eq!(dist, [0, 1, 2, -1]);
        assert_eq!(gnb_bfs_distances(g, 9, dist.as_mut_ptr(), 4), GnbStatus::Param);
        gnb_graph_free(g);

        let loops = [2usize];
        assert_eq!(
            gnb_graph_from_edges(4, loops.as_ptr(), loops.as_ptr(), 1, &mut g),
            GnbStatus::Param
        );
    }
}

#[test]
fn dataset_save_load_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("ws").to_str().unwrap()).unwrap();
    unsafe {
        let mut ds: *mut GnbDataset = ptr::null_mut();
        assert_eq!(gnb_dataset_ws1000_gamma(3, 4, 5, 0.6, &mut ds), GnbStatus::Ok);
        let n = gnb_dataset_num_nodes(ds);
        let d = gnb_dataset_feature_dim(ds);
        assert_eq!(d, 1000);
        assert!(n > 0 && n <= 1000);
        assert_eq!(gnb_dataset_save(ds, path.as_ptr()), GnbStatus::Ok);

        let mut back: *mut GnbDataset = ptr::null_mut();
        assert_eq!(gnb_dataset_load(path.as_ptr(), &mut back), GnbStatus::Ok);
        let mut a = vec![0.0; n * d];
        let mut b = vec![0.0; n * d];
        assert_eq!(gnb_dataset_features(ds, a.as_mut_ptr(), a.len()), GnbStatus::Ok);
        assert_eq!(gnb_dataset_features(back, b.as_mut_ptr(), b.len()), GnbStatus::Ok);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));

        let (mut g1, mut g2): (*mut GnbGraph, *mut GnbGraph) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(gnb_dataset_graph(ds, &mut g1), GnbStatus::Ok);
        assert_eq!(gnb_dataset_graph(back, &mut g2), GnbStatus::Ok);
        assert_eq!(gnb_graph_num_edges(g1), gnb_graph_num_edges(g2));
        gnb_graph_free(g1);
        gnb_graph_free(g2);
        gnb_dataset_free(ds);
        gnb_dataset_free(back);
    }
}

#[test]
fn load_errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = CString::new(dir.path().join("nope").to_str().unwrap()).unwrap();
    unsafe {
        let mut ds: *mut GnbDataset = ptr::null_mut();
        assert_eq!(gnb_dataset_load(missing.as_ptr(), &mut ds), GnbStatus::Io);
        assert!(ds.is_null());
        assert!(!last_error().is_empty());

        std::fs::create_dir(dir.path().join("bad")).unwrap();
        std::fs::write(dir.path().join("bad/meta.txt"), "name=x\nnum_nodes=2\n").unwrap();
        std::fs::write(dir.path().join("bad/edges.csv"), "src,dst\n1,0\n").unwrap();
        std::fs::write(dir.path().join("bad/features.gft"), b"GFT1").unwrap();
        let bad = CString::new(dir.path().join("bad").to_str().unwrap()).unwrap();
        assert_eq!(gnb_dataset_load(bad.as_ptr(), &mut ds), GnbStatus::Format);
        assert_eq!(gnb_dataset_load(ptr::null(), &mut ds), GnbStatus::NullPointer);
    }
}

#[test]
fn roc_auc_through_c_abi() {
    let scores = [0.5, 0.5, 0.2];
    let labels = [1u8, 0, 0];
    let mut auc = 0.0;
    unsafe {
        assert_eq!(gnb_roc_auc(scores.as_ptr(), labels.as_ptr(), 3, &mut auc), GnbStatus::Ok);
        assert_eq!(auc, 0.75);
        let one = [1u8, 1, 1];
        assert_eq!(gnb_roc_auc(scores.as_ptr(), one.as_ptr(), 3, &mut auc), GnbStatus::Other);
        assert!(last_error().contains("metric"));
    }
}

#[test]
fn free_accepts_null() {
    unsafe {
        gnb_graph_free(ptr::null_mut());
        gnb_dataset_free(ptr::null_mut());
    }
}

#[test]
fn generated_header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/gnb.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["gnb_ws_generate", "gnb_dataset_load", "gnb_roc_auc", "gnb_last_error", "GNB_STATUS_OK"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\nint main(void) {{\n  GnbGraph *g = 0;\n  GnbStatus s = gnb_ws_generate(10, 2, 0.1, 1, &g);\n  gnb_graph_free(g);\n  return s == GNB_STATUS_OK ? 0 : 1;\n}}\n"
        ),
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(e) => panic!("no C compiler available: {e}"),
    }
}
