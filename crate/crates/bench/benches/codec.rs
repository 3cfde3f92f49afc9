//! Compression / decompression throughput on synthetic fields.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use ccx_core::codec::{compress, compress_pipelined, decompress, ErrorBound, DEFAULT_CHUNK_ELEMENTS};
use ccx_core::synth::{generate, DatasetKind};

fn codec_benches(c: &mut Criterion) {
    let eb = ErrorBound::new(1e-3).unwrap();
    let mut group = c.benchmark_group("codec");
    for elements in [64 * 1024usize, 1024 * 1024] {
        let field = generate(DatasetKind::SinusoidMix, elements, 9).unwrap();
        let stream = compress(&field, eb).unwrap();
        group.throughput(Throughput::Bytes((elements * 4) as u64));
        group.bench_with_input(BenchmarkId::new("compress", elements), &field, |b, f| {
            b.iter(|| compress(f, eb).unwrap())
        });
        group.bench_with_input(
            BenchmarkId::new("compress-chunked", elements),
            &field,
            |b, f| b.iter(|| compress_pipelined(f, eb, DEFAULT_CHUNK_ELEMENTS, || {}).unwrap()),
        );
        group.bench_with_input(BenchmarkId::new("decompress", elements), &stream, |b, s| {
            b.iter(|| decompress(s).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, codec_benches);
criterion_main!(benches);
