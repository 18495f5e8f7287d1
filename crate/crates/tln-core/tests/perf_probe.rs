//! Kernel throughput probe (ignored by default; run explicitly when tuning).

use std::time::Instant;
use tln_core::tensor::{matmul, matmul_acc, matmul_nt_acc, matmul_tn_acc, Tensor};

#[test]
#[ignore]
fn matmul_throughput() {
    // GRU-shaped workloads: (64x32)·(32x96) recurrent step and backward forms.
    let a = Tensor::new(64, 32, (0..64 * 32).map(|i| (i as f64 * 0.001).sin()).collect());
    let b = Tensor::new(32, 96, (0..32 * 96).map(|i| (i as f64 * 0.002).cos()).collect());
    let iters = 200_000;
    let flops = (2 * 64 * 32 * 96) as f64 * iters as f64;

    let t0 = Instant::now();
    let mut sink = 0.0;
    for _ in 0..iters {
        let c = matmul(&a, &b);
        sink += c.data()[0];
    }
    let dt = t0.elapsed().as_secs_f64();
    println!("matmul_nn: {:.2} GFLOP/s (sink {sink})", flops / dt / 1e9);

    let g = Tensor::new(64, 96, (0..64 * 96).map(|i| (i as f64 * 0.003).sin()).collect());
    let t0 = Instant::now();
    let mut da = Tensor::zeros(64, 32);
    for _ in 0..iters {
        matmul_nt_acc(&mut da, &g, &b);
    }
    let dt = t0.elapsed().as_secs_f64();
    println!("matmul_nt: {:.2} GFLOP/s (sink {})", flops / dt / 1e9, da.data()[0]);

    let t0 = Instant::now();
    let mut db = Tensor::zeros(32, 96);
    for _ in 0..iters {
        matmul_tn_acc(&mut db, &a, &g);
    }
    let dt = t0.elapsed().as_secs_f64();
    println!("matmul_tn: {:.2} GFLOP/s (sink {})", flops / dt / 1e9, db.data()[0]);

    let t0 = Instant::now();
    let mut c = Tensor::zeros(64, 96);
    for _ in 0..iters {
        matmul_acc(&mut c, &a, &b);
    }
    let dt = t0.elapsed().as_secs_f64();
    println!("matmul_acc(prealloc): {:.2} GFLOP/s (sink {})", flops / dt / 1e9, c.data()[0]);
}
