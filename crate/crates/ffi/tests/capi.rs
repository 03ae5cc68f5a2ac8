use std::ffi::{CStr, CString};
use std::ptr;

use block_gossip::covering;
use block_gossip::gossip::{self, ConsensusProblem, NoiseModel};
use block_gossip::graph;
use block_gossip::linalg::Vector;
use block_gossip_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bg_last_error()) }.to_str().unwrap().to_owned()
}

fn graph_of(status: BgStatus, g: *mut BgGraph) -> *mut BgGraph {
    assert_eq!(status, BgStatus::Ok, "{}", last_error());
    assert!(!g.is_null());
    g
}

#[test]
fn graph_handles_report_sizes() {
    unsafe {
        let mut g = ptr::null_mut();
        let g = graph_of(bg_graph_lattice(10, 10, &mut g), g);
        assert_eq!(bg_graph_node_count(g), 100);
        assert_eq!(bg_graph_edge_count(g), 180);
        let mut lambda = 0.0;
        assert_eq!(bg_graph_algebraic_connectivity(g, &mut lambda), BgStatus::Ok);
        // λ₂ of the 10×10 grid is 2 − 2cos(π/10)
        let expected = 2.0 - 2.0 * (std::f64::consts::PI / 10.0).cos();
        assert!((lambda - expected).abs() < 1e-10);
        bg_graph_free(g);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(bg_graph_erdos_renyi(10, 1.2, 0, &mut g), BgStatus::InvalidParameter);
        assert!(g.is_null());
        assert!(!last_error().is_empty());

        let endpoints = [0usize, 1, 2, 3];
        assert_eq!(bg_graph_from_edges(4, endpoints.as_ptr(), 2, &mut g), BgStatus::Ok);
        let mut lambda = 0.0;
        assert_eq!(bg_graph_algebraic_connectivity(g, &mut lambda), BgStatus::Disconnected);
        assert!(last_error().contains('2'));
        let mut c = ptr::null_mut();
        assert_eq!(bg_covering_ies(g, &mut c), BgStatus::Ok);
        let mut rate = 0.0;
        assert_eq!(bg_gossip_rate_bound(c, g, &mut rate), BgStatus::Disconnected);
        bg_covering_free(c);
        bg_graph_free(g);

        let bad = [0usize, 4];
        let mut h = ptr::null_mut();
        assert_eq!(bg_graph_from_edges(4, bad.as_ptr(), 1, &mut h), BgStatus::InvalidGraph);
        assert_eq!(bg_graph_node_count(ptr::null()), 0);
        assert_eq!(bg_graph_save(ptr::null(), c"x".as_ptr()), BgStatus::NullPointer);
        bg_graph_free(ptr::null_mut());
    }
}

#[test]
fn coverings_match_library_constants() {
    unsafe {
        let mut g = ptr::null_mut();
        let g = graph_of(bg_graph_erdos_renyi(25, 0.5, 3, &mut g), g);
        let lib_graph = graph::generate_erdos_renyi(25, 0.5, 3).unwrap();
        let lib_cover = covering::random_path_cover(&lib_graph, 4, lib_graph.edge_count(), 7).unwrap();
        let expected = covering::constants(&lib_cover, &lib_graph).unwrap();

        let mut c = ptr::null_mut();
        assert_eq!(
            bg_covering_random_paths(g, 4, lib_graph.edge_count(), 7, &mut c),
            BgStatus::Ok
        );
        assert_eq!(bg_covering_block_count(c), lib_cover.blocks().len());
        let mut k = std::mem::zeroed::<BgConstants>();
        assert_eq!(bg_covering_constants(c, g, &mut k), BgStatus::Ok);
        assert_eq!(k.block_count, expected.block_count);
        assert_eq!(k.alpha, expected.alpha);
        assert_eq!(k.beta, expected.beta);
        assert_eq!(k.min_multiplicity, expected.min_multiplicity);
        assert_eq!(k.max_multiplicity, expected.max_multiplicity);
        assert_eq!(k.max_block_size, expected.max_block_size);

        let mut rate = 0.0;
        assert_eq!(bg_gossip_rate_bound(c, g, &mut rate), BgStatus::Ok);
        assert_eq!(rate, gossip::gossip_rate_bound(&expected, &lib_graph).unwrap());
        bg_covering_free(c);
        bg_graph_free(g);
    }
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let gpath = CString::new(dir.path().join("g.txt").to_str().unwrap()).unwrap();
    let cpath = CString::new(dir.path().join("c.txt").to_str().unwrap()).unwrap();
    unsafe {
        let mut g = ptr::null_mut();
        let g = graph_of(bg_graph_complete(6, &mut g), g);
        let mut c = ptr::null_mut();
        assert_eq!(bg_covering_clique(g, &mut c), BgStatus::Ok);
        assert_eq!(bg_graph_save(g, gpath.as_ptr()), BgStatus::Ok);
        assert_eq!(bg_covering_save(c, cpath.as_ptr()), BgStatus::Ok);

        let mut g2 = ptr::null_mut();
        let mut c2 = ptr::null_mut();
        assert_eq!(bg_graph_load(gpath.as_ptr(), &mut g2), BgStatus::Ok);
        assert_eq!(bg_covering_load(cpath.as_ptr(), &mut c2), BgStatus::Ok);
        assert_eq!(bg_graph_edge_count(g2), 15);
        assert_eq!(bg_covering_block_count(c2), bg_covering_block_count(c));

        let mut missing = ptr::null_mut();
        assert_eq!(
            bg_graph_load(c"/nonexistent/graph.txt".as_ptr(), &mut missing),
            BgStatus::Io
        );
        for h in [g, g2] {
            bg_graph_free(h);
        }
        for h in [c, c2] {
            bg_covering_free(h);
        }
    }
}

#[test]
fn explicit_blocks_are_validated() {
    unsafe {
        let mut c = ptr::null_mut();
        // blocks {0, 1} and {2} over three rows
        let offsets = [0usize, 2, 3];
        let ids = [0usize, 1, 2];
        assert_eq!(
            bg_covering_from_blocks(3, offsets.as_ptr(), 2, ids.as_ptr(), &mut c),
            BgStatus::Ok
        );
        assert_eq!(bg_covering_block_count(c), 2);
        bg_covering_free(c);

        // row 2 uncovered
        let offsets = [0usize, 2];
        let mut d = ptr::null_mut();
        assert_eq!(
            bg_covering_from_blocks(3, offsets.as_ptr(), 1, ids.as_ptr(), &mut d),
            BgStatus::InvalidCovering
        );
        assert!(d.is_null());
    }
}

#[test]
fn gossip_run_matches_library() {
    unsafe {
        let mut g = ptr::null_mut();
        let g = graph_of(bg_graph_erdos_renyi(15, 0.6, 1, &mut g), g);
        let mut c = ptr::null_mut();
        assert_eq!(bg_covering_ies(g, &mut c), BgStatus::Ok);
        let n = bg_graph_node_count(g);
        let m = bg_graph_edge_count(g);
        let values: Vec<f64> = (0..n).map(|i| (i * i) as f64).collect();
        let std = vec![0.1; m];
        let iterations = 50;
        let mut errors = vec![0.0; iterations + 1];
        let mut last = vec![0.0; n];
        let status = bg_gossip_run(
            g,
            c,
            values.as_ptr(),
            BgNoiseKind::VaryingEdge,
            std.as_ptr(),
            iterations,
            5,
            errors.as_mut_ptr(),
            last.as_mut_ptr(),
        );
        assert_eq!(status, BgStatus::Ok, "{}", last_error());

        let lib_graph = graph::generate_erdos_renyi(15, 0.6, 1).unwrap();
        let lib_cover = covering::greedy_ies_cover(&lib_graph).unwrap();
        let problem = ConsensusProblem::new(lib_graph, Vector::from_vec(values.clone())).unwrap();
        let model = NoiseModel::VaryingEdgeError { std };
        let run = gossip::run(&problem, &lib_cover, &model, iterations, 5, true).unwrap();
        assert_eq!(errors, run.errors);
        assert_eq!(last.as_slice(), run.values.last().unwrap().as_slice());

        // wrong noise length cannot be detected, but a null buffer can
        let status = bg_gossip_run(
            g,
            c,
            values.as_ptr(),
            BgNoiseKind::ConstantEdge,
            ptr::null(),
            iterations,
            5,
            errors.as_mut_ptr(),
            ptr::null_mut(),
        );
        assert_eq!(status, BgStatus::NullPointer);
        bg_covering_free(c);
        bg_graph_free(g);
    }
}

#[test]
fn kaczmarz_run_reaches_minimum_norm_target() {
    // rank-2 system: third column is the sum of the first two
    let a = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, -1.0, 1.0];
    let z = [0.5, -1.0, 0.25];
    let b: Vec<f64> = (0..4).map(|i| (0..3).map(|j| a[3 * i + j] * z[j]).sum()).collect();
    let x0 = [3.0, -2.0, 1.0];
    // ker A is spanned by k = (1, 1, −1)/√3; x* keeps x₀'s kernel part and
    // takes the rest from z
    let k = [1.0, 1.0, -1.0].map(|v: f64| v / 3f64.sqrt());
    let along = |v: &[f64]| -> f64 { v.iter().zip(&k).map(|(a, b)| a * b).sum() };
    let shift = along(&x0) - along(&z);
    let target: Vec<f64> = (0..3).map(|j| z[j] + shift * k[j]).collect();
    unsafe {
        let mut c = ptr::null_mut();
        let offsets = [0usize, 2, 4];
        let ids = [0usize, 1, 2, 3];
        assert_eq!(
            bg_covering_from_blocks(4, offsets.as_ptr(), 2, ids.as_ptr(), &mut c),
            BgStatus::Ok
        );
        let iterations = 200;
        let mut x = [0.0; 3];
        let mut errors = vec![0.0; iterations + 1];
        let status = bg_kaczmarz_run(
            a.as_ptr(),
            4,
            3,
            b.as_ptr(),
            x0.as_ptr(),
            c,
            iterations,
            2,
            x.as_mut_ptr(),
            errors.as_mut_ptr(),
        );
        assert_eq!(status, BgStatus::Ok, "{}", last_error());
        for j in 0..3 {
            assert!((x[j] - target[j]).abs() < 1e-10, "{x:?} vs {target:?}");
        }
        assert!(errors.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(*errors.last().unwrap() < 1e-10);

        let status = bg_kaczmarz_run(
            a.as_ptr(),
            4,
            3,
            b.as_ptr(),
            x0.as_ptr(),
            c,
            1,
            2,
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(status, BgStatus::NullPointer);
        // covering over the wrong number of rows
        let status = bg_kaczmarz_run(
            a.as_ptr(),
            3,
            4,
            b.as_ptr(),
            x0.as_ptr(),
            c,
            1,
            2,
            x.as_mut_ptr(),
            ptr::null_mut(),
        );
        assert_ne!(status, BgStatus::Ok);
        bg_covering_free(c);
    }
}
