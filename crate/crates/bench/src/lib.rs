//! Benchmark bodies, shared by the `criterion` harness in `benches/`.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};

use multipoint_core::bigreal::PrecisionContext;
use multipoint_core::funcsuite::{builtin_function, EvalCounter, TestFunction};
use multipoint_core::orderlab::{
    family_scheme, verify_order, ConditionSet, Family, DEFAULT_TRUNCATION,
};
use multipoint_core::schemes::{builtin_method, iterate, single_step};
use multipoint_core::tables::{run_table, table_spec, DEFAULT_TNFE};

fn suite_function(id: &str, bits: u32) -> TestFunction {
    let ctx = PrecisionContext::new(bits).expect("valid precision");
    builtin_function(id, ctx)
        .expect("suite builds")
        .expect("known id")
}

/// One iteration of each family member on f4 across precisions.
pub fn single_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("single_step");
    for bits in [256, 1024, 4096] {
        let f = suite_function("f4", bits);
        let x0 = f.default_x0().unwrap().clone();
        for name in ["NM", "FD1-M1", "FD2-M1", "FD5", "FD7"] {
            let m = builtin_method(name).unwrap();
            group.bench_with_input(BenchmarkId::new(name, bits), &bits, |b, _| {
                b.iter(|| single_step(&m, &f, black_box(&x0), &EvalCounter::new()))
            });
        }
    }
    group.finish();
}

/// A full TNFE = 12 run, the unit of work behind every table cell.
pub fn runs(c: &mut Criterion) {
    let mut group = c.benchmark_group("iterate");
    let f = suite_function("f9", 4096);
    let x0 = f.default_x0().unwrap().clone();
    for name in ["FD1-M2", "FD4", "FS3-1"] {
        let m = builtin_method(name).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| iterate(&m, &f, black_box(&x0), DEFAULT_TNFE))
        });
    }
    group.finish();
}

pub fn tables(c: &mut Criterion) {
    let mut group = c.benchmark_group("table");
    group.sample_size(10);
    let ctx = PrecisionContext::default();
    for id in [2, 5, 7] {
        let spec = table_spec(id).unwrap();
        group.bench_function(BenchmarkId::from_parameter(id), |b| {
            b.iter(|| run_table(&spec, ctx, DEFAULT_TNFE).unwrap())
        });
    }
    group.finish();
}

pub fn certification(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_order");
    group.sample_size(10);
    for (fam, set) in [
        (Family::Nm, ConditionSet::Base),
        (Family::Fd2, ConditionSet::Seventh),
        (Family::Fd3, ConditionSet::Base),
    ] {
        let scheme = family_scheme(fam, set).unwrap();
        group.bench_function(format!("{fam}/{set}"), |b| {
            b.iter(|| verify_order(&scheme, DEFAULT_TRUNCATION).unwrap())
        });
    }
    group.finish();
}
