use faun_core::comm::{run_spmd, CollectiveKind, Words};
use faun_core::cost::{per_iter_cost, Scheme};
use faun_core::dist::{distribute_padded, mpifaun_run, naive_run, run_faun, run_naive, DistMode, ProcessorGrid};
use faun_core::io::{gen_dense_lowrank, gen_sparse_uniform};
use faun_core::rng::PortableRng;
use faun_core::{aunmf_run, Algorithm, DataMatrix, DenseMatrix, NmfConfig, NmfError};

fn grid(pr: usize, pc: usize) -> ProcessorGrid {
    ProcessorGrid::new(pr, pc).unwrap()
}

fn uniform(m: usize, n: usize, seed: u64) -> DenseMatrix {
    let rng = PortableRng::new(seed);
    DenseMatrix::from_fn(m, n, |i, j| rng.uniform(77, i as u64, j as u64))
}

fn rel(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.distance(b) / b.frobenius_sq().sqrt().max(f64::MIN_POSITIVE)
}

/// `A = W₀ H₀` where every row of `W₀` and every column of `H₀` has one
/// small integer entry and every squared column sum of `W₀` and row sum of
/// `H₀` is a power of four. One iteration from `(W₀, H₀)` then runs in
/// exact arithmetic under every algorithm and any summation order.
fn exact_case(m: usize, n: usize, k: usize) -> (DenseMatrix, DenseMatrix, DenseMatrix) {
    assert!(m.is_multiple_of(k) && m / k == 8 && n.is_multiple_of(k) && n / k == 4);
    let wv = [1.0, 1.0, 1.0, 3.0, 1.0, 1.0, 1.0, 1.0]; // squares sum to 16
    let hv = [2.0, 2.0, 2.0, 2.0]; // squares sum to 16
    let w = DenseMatrix::from_fn(m, k, |i, c| if i % k == c { wv[(i / k + c) % 8] } else { 0.0 });
    let h = DenseMatrix::from_fn(k, n, |c, j| if j % k == c { hv[j / k] * (c + 1) as f64 } else { 0.0 });
    let a = DenseMatrix::from_fn(m, n, |i, j| (0..k).map(|c| w.get(i, c) * h.get(c, j)).sum());
    (a, w, h)
}

#[test]
fn single_rank_matches_sequential_bitwise() {
    let a = uniform(20, 14, 1);
    for algo in Algorithm::ALL {
        let cfg = NmfConfig::new(3, 4, algo, 5);
        let seq = aunmf_run(&a, &cfg).unwrap();
        let data = DataMatrix::Dense(a.clone());
        for run in [run_faun(&data, grid(1, 1), &cfg).unwrap(), run_naive(&data, 1, &cfg).unwrap()] {
            assert_eq!(run.w, seq.w, "{algo}");
            assert_eq!(run.ht, seq.ht, "{algo}");
            assert_eq!(run.trace.rel_error, seq.trace.rel_error, "{algo}");
        }
    }
}

#[test]
fn exact_case_is_bitwise_everywhere() {
    let (a, w0, h0) = exact_case(24, 12, 3);
    let data = DataMatrix::Dense(a.clone());
    for algo in Algorithm::ALL {
        let cfg = NmfConfig::new(3, 1, algo, 0).with_initial(w0.clone(), &h0);
        let seq = aunmf_run(&a, &cfg).unwrap();
        for (p, g) in [(2, grid(2, 1)), (4, grid(2, 2)), (6, grid(3, 2)), (4, grid(1, 4))] {
            let f = run_faun(&data, g, &cfg).unwrap();
            assert_eq!((&f.w, &f.ht), (&seq.w, &seq.ht), "{algo} faun {g}");
            let nv = run_naive(&data, p, &cfg).unwrap();
            assert_eq!((&nv.w, &nv.ht), (&seq.w, &seq.ht), "{algo} naive {p}");
        }
    }
}

#[test]
fn naive_mu_and_bpp_are_bitwise_on_generic_data() {
    let a = DataMatrix::Dense(uniform(24, 16, 3));
    for algo in [Algorithm::Mu, Algorithm::Bpp] {
        let cfg = NmfConfig::new(3, 3, algo, 2);
        let seq = aunmf_run(&a, &cfg).unwrap();
        let nv = run_naive(&a, 4, &cfg).unwrap();
        assert_eq!((&nv.w, &nv.ht), (&seq.w, &seq.ht), "{algo}");
    }
}

#[test]
fn six_ranks_track_sequential_every_iteration() {
    let a = uniform(24, 12, 4);
    let data = DataMatrix::Dense(a.clone());
    for algo in Algorithm::ALL {
        let cfg = NmfConfig::new(3, 10, algo, 8).with_history();
        let seq = aunmf_run(&a, &cfg).unwrap();
        let f = run_faun(&data, grid(3, 2), &cfg).unwrap();
        let nv = run_naive(&data, 4, &cfg).unwrap();
        for run in [&f.history, &nv.history] {
            assert_eq!(run.len(), 10);
            for (it, ((w, ht), (sw, sht))) in run.iter().zip(&seq.history).enumerate() {
                assert!(rel(w, sw) <= 1e-8, "{algo} iteration {it}: W off by {}", rel(w, sw));
                assert!(rel(ht, sht) <= 1e-8, "{algo} iteration {it}: H off by {}", rel(ht, sht));
            }
        }
    }
}

#[test]
fn padding_leaves_real_entries_alone() {
    let a = uniform(10, 9, 5);
    let data = DataMatrix::Dense(a.clone());
    for algo in Algorithm::ALL {
        let cfg = NmfConfig::new(2, 5, algo, 3);
        let seq = aunmf_run(&a, &cfg).unwrap();
        let f = run_faun(&data, grid(2, 2), &cfg).unwrap();
        assert_eq!((f.w.rows(), f.ht.rows()), (10, 9));
        assert!(rel(&f.w, &seq.w) <= 1e-8, "{algo}");
        assert!(rel(&f.ht, &seq.ht) <= 1e-8, "{algo}");
        let nv = run_naive(&data, 4, &cfg).unwrap();
        assert_eq!(nv.w.rows(), 10);
        assert!(rel(&nv.w, &seq.w) <= 1e-8, "{algo}");
    }
}

#[test]
fn counters_match_the_model() {
    let a = DataMatrix::Dense(gen_dense_lowrank(96, 48, 4, 1).unwrap());
    for algo in Algorithm::ALL {
        let cfg = NmfConfig::new(2, 3, algo, 1);
        for g in [grid(4, 1), grid(2, 2), grid(1, 4)] {
            let run = run_faun(&a, g, &cfg).unwrap();
            let model = per_iter_cost(Scheme::Faun, 96, 48, 2, 4, g, algo).unwrap();
            for d in &run.per_iter_counters {
                assert_eq!(d.words(), model.words, "{algo} {g}");
                assert_eq!(d.messages(), model.messages, "{algo} {g}");
                for kind in CollectiveKind::ALL {
                    assert_eq!(d.get(kind).words, model.words_of(kind));
                }
            }
        }
        let run = run_naive(&a, 4, &cfg).unwrap();
        let model = per_iter_cost(Scheme::Naive, 96, 48, 2, 4, grid(4, 1), algo).unwrap();
        for d in &run.per_iter_counters {
            assert_eq!((d.words(), d.messages()), (model.words, model.messages), "{algo} naive");
        }
        if algo == Algorithm::Mu {
            assert_eq!(model.words, Words::from(216));
        }
    }
}

#[test]
fn counters_ignore_sparsity() {
    let cfg = NmfConfig::new(2, 2, Algorithm::Bpp, 1);
    let mut seen = Vec::new();
    for density in [0.05, 0.2, 0.6] {
        let a = DataMatrix::Sparse(gen_sparse_uniform(64, 32, density, 9).unwrap());
        let run = run_faun(&a, grid(2, 2), &cfg).unwrap();
        seen.push(run.per_iter_counters[0]);
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn sparse_input_matches_dense() {
    let s = gen_sparse_uniform(40, 24, 0.3, 2).unwrap();
    let d = s.to_dense();
    let cfg = NmfConfig::new(3, 3, Algorithm::Mu, 4);
    let rs = run_faun(&DataMatrix::Sparse(s), grid(2, 2), &cfg).unwrap();
    let rd = run_faun(&DataMatrix::Dense(d), grid(2, 2), &cfg).unwrap();
    assert_eq!((rs.w, rs.ht), (rd.w, rd.ht));
}

#[test]
fn wrong_block_mode_is_rejected() {
    let a = DataMatrix::Dense(uniform(8, 8, 1));
    let cfg = NmfConfig::new(2, 1, Algorithm::Mu, 1);
    let naive = distribute_padded(&a, grid(2, 1), DistMode::Naive).unwrap();
    let out = run_spmd(2, |c| Ok(mpifaun_run(c, &naive, &cfg, 1.0).is_err())).unwrap();
    assert!(out.iter().all(|&e| e));
    let two_d = distribute_padded(&a, grid(2, 1), DistMode::TwoD).unwrap();
    let out = run_spmd(2, |c| Ok(naive_run(c, &two_d, &cfg, 1.0).is_err())).unwrap();
    assert!(out.iter().all(|&e| e));
}

#[test]
fn kernel_failure_names_rank_and_iteration() {
    // two identical rows in H make H Hᵀ singular, which BPP refuses
    let a = uniform(8, 8, 2);
    let h = DenseMatrix::from_fn(2, 8, |_, j| 1.0 + j as f64);
    let cfg = NmfConfig::new(2, 2, Algorithm::Bpp, 1).with_initial(uniform(8, 2, 3), &h);
    let seq = aunmf_run(&a, &cfg).unwrap_err();
    assert!(matches!(seq, NmfError::AtIteration { iteration: 0, rank: None, .. }));
    let err = run_faun(&DataMatrix::Dense(a), grid(2, 2), &cfg).unwrap_err();
    assert!(matches!(err, NmfError::AtIteration { iteration: 0, rank: Some(_), .. }), "{err:?}");
    assert!(matches!(err.root(), NmfError::InvalidArgument(_)));
}

#[test]
fn naive_moves_more_words() {
    let a = DataMatrix::Dense(uniform(64, 64, 6));
    let cfg = NmfConfig::new(4, 1, Algorithm::Mu, 1);
    let f = run_faun(&a, grid(2, 2), &cfg).unwrap();
    let nv = run_naive(&a, 4, &cfg).unwrap();
    assert!(nv.per_iter_counters[0].words() > f.per_iter_counters[0].words());
}
