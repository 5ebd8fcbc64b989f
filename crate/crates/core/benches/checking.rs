//! Sequential against data-parallel execution of the checking workloads.

use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use c2o_core::compile;
use c2o_core::contract::parse;
use c2o_core::exec::Exec;
use c2o_core::gen::{random_contract, GenConfig};
use c2o_core::harness::{
    builtin, check_bounded, diff, BoundedConfig, DiffConfig, Domains, Harness,
};
use c2o_core::types::TypeConfig;

fn executors() -> Vec<(&'static str, Exec)> {
    let par = Exec::parallel();
    let mut v = vec![("sequential", Exec::with_jobs(Some(1)))];
    if par.is_parallel() {
        v.push(("parallel", par));
    }
    v
}

fn bounded(c: &mut Criterion) {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", "bscu_com.agc"]
        .iter()
        .collect();
    let contract = parse(&std::fs::read_to_string(path).unwrap()).unwrap();
    let observer = compile(&contract, &TypeConfig::default()).unwrap();
    let h = Harness::new(observer, builtin("bscu-com").unwrap()).unwrap();
    let cfg = BoundedConfig {
        depth: 8,
        ..BoundedConfig::default()
    };
    let mut g = c.benchmark_group("bounded_bscu_depth8");
    g.sample_size(10);
    for (name, exec) in executors() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| check_bounded(&h, &Domains::new(), &cfg, &exec).unwrap())
        });
    }
    g.finish();
}

fn differential(c: &mut Criterion) {
    let contracts: Vec<_> = (0..20)
        .map(|s| random_contract(s, &GenConfig::default()))
        .collect();
    let dc = DiffConfig {
        trials: 200,
        depth: 20,
        ..DiffConfig::default()
    };
    let mut g = c.benchmark_group("diff_20_contracts");
    g.sample_size(10);
    for (name, exec) in executors() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                for k in &contracts {
                    diff(k, &TypeConfig::default(), &dc, &exec).unwrap();
                }
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bounded, differential);
criterion_main!(benches);
