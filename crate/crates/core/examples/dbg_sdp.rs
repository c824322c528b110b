use qclf::mat::{symmetrize, spectral_abscissa, DenseMatrix, SymmetricMatrix};
use qclf::sdp::{solve, SdpStandardForm, SolverConfig, SdpStatus};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    // Verification-style: minimize <-sym(QA),Z> s.t. <I,Z>=1, <sym(QB_i),Z>=0
    for &(n, m) in &[(10usize, 2usize), (30, 5), (50, 8), (100, 2), (100, 8)] {
        let t0 = Instant::now();
        let p_mat = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0f64..1.0));
        let q = symmetrize(&(&p_mat.matmul(&p_mat.transpose()) + &DenseMatrix::identity(n).scale(1e-8))).unwrap();
        // A with one unstable eigenvalue: diag similarity
        let g = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0f64..1.0));
        let shift = spectral_abscissa(&g).unwrap() - 1.0;
        let a = &g - &DenseMatrix::identity(n).scale(shift - 0.0); // abscissa 1.0
        let qa = symmetrize(&q.dense().matmul(&a)).unwrap();
        let scale = 1.0 / qa.frobenius_norm();
        let c = qa.scale(-scale);
        let mut cons = vec![(SymmetricMatrix::identity(n), 1.0)];
        for _ in 0..m {
            let b = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0f64..1.0));
            let qb = symmetrize(&q.dense().matmul(&b)).unwrap();
            let s = 1.0 / qb.frobenius_norm();
            cons.push((qb.scale(s), 0.0));
        }
        let prob = SdpStandardForm::new(c, cons).unwrap();
        let r = solve(&prob, &SolverConfig::default()).unwrap();
        let ms = t0.elapsed().as_millis();
        println!("n={n} m={m}: {:?} iters {} gap {:.2e} pres {:.2e} dres {:.2e} [{} ms]",
            r.status, r.iterations, r.gap, r.diagnostics.primal_residual, r.diagnostics.dual_residual, ms);
        assert_eq!(r.status, SdpStatus::Optimal);
    }
    println!("all stress cases optimal");
}
