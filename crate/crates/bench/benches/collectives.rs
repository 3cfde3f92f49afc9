//! Wall-clock cost of driving the virtual-time collectives; this
//! measures the simulator plus codec work, not network time.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ccx_core::codec::ErrorBound;
use ccx_core::collectives::{run_allgather, run_allreduce, PipelineConfig, ReduceOp, Variant};
use ccx_core::synth::{generate, DatasetKind};
use ccx_core::transport::{CommWorld, SimParams};
use ccx_core::FloatField;

fn inputs(n: usize, len: usize) -> Vec<FloatField> {
    (0..n).map(|r| generate(DatasetKind::SinusoidMix, len, 40 + r as u64).unwrap()).collect()
}

fn collective_benches(c: &mut Criterion) {
    let cfg = PipelineConfig::default();
    let eb = ErrorBound::new(1e-3).unwrap();
    let n = 8usize;
    let world = CommWorld::virtual_time(n, SimParams::default()).unwrap();
    let fields = inputs(n, n * 4096);

    let mut group = c.benchmark_group("collectives");
    for variant in [Variant::Baseline, Variant::CprP2p, Variant::CColl] {
        let bound = match variant {
            Variant::Baseline => None,
            _ => Some(eb),
        };
        group.bench_with_input(
            BenchmarkId::new("allgather", variant.name()),
            &variant,
            |b, &v| b.iter(|| run_allgather(&world, v, &fields, bound, &cfg).unwrap()),
        );
        group.bench_with_input(
            BenchmarkId::new("allreduce-sum", variant.name()),
            &variant,
            |b, &v| {
                b.iter(|| run_allreduce(&world, v, &fields, ReduceOp::Sum, bound, &cfg).unwrap())
            },
        );
    }
    group.finish();
}

criterion_group!(benches, collective_benches);
criterion_main!(benches);
