// Serial reference vs OpenMP kernels for the profiler's data-parallel stages.

#include "d2d/profile/dependencies.hpp"
#include "d2d/profile/inference.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace d2d::profile;

TypedTable synthetic(std::size_t cols, std::size_t rows)
{
    std::mt19937_64 rng(1234);
    TypedTable t;
    t.row_count = rows;
    for (std::size_t c = 0; c < cols; ++c) {
        TypedColumn col;
        col.name = "c" + std::to_string(c);
        col.type = ColumnType::integer;
        const auto card = (c % 4 == 0) ? rows : 3 + c * 7;
        for (std::size_t r = 0; r < rows; ++r) {
            col.values.emplace_back(static_cast<std::int64_t>(rng() % card));
        }
        t.columns.push_back(std::move(col));
    }
    return t;
}

d2d::ingest::RawTable synthetic_raw(std::size_t cols, std::size_t rows)
{
    std::mt19937_64 rng(99);
    d2d::ingest::RawTable t;
    for (std::size_t c = 0; c < cols; ++c) {
        t.column_names.push_back("c" + std::to_string(c));
    }
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<d2d::ingest::Cell> row;
        for (std::size_t c = 0; c < cols; ++c) {
            switch (c % 3) {
            case 0: row.push_back({std::to_string(rng() % 10000), false}); break;
            case 1: row.push_back({"$" + std::to_string(rng() % 500) + ".25", false}); break;
            default: row.push_back({"2024-0" + std::to_string(1 + rng() % 9) + "-1" + std::to_string(rng() % 9), false});
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void BM_FdSerial(benchmark::State& state)
{
    const auto enc = encode(synthetic(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1))));
    for (auto _ : state) {
        benchmark::DoNotOptimize(discover_fds_serial(enc));
    }
}

void BM_FdParallel(benchmark::State& state)
{
    const auto enc = encode(synthetic(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1))));
    for (auto _ : state) {
        benchmark::DoNotOptimize(discover_fds_parallel(enc));
    }
}

void BM_KeysSerial(benchmark::State& state)
{
    const auto enc = encode(synthetic(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1))));
    for (auto _ : state) {
        benchmark::DoNotOptimize(discover_keys_serial(enc));
    }
}

void BM_KeysParallel(benchmark::State& state)
{
    const auto enc = encode(synthetic(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1))));
    for (auto _ : state) {
        benchmark::DoNotOptimize(discover_keys_parallel(enc));
    }
}

void BM_TypeSerial(benchmark::State& state)
{
    const auto raw = synthetic_raw(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(type_table_serial(raw));
    }
}

void BM_TypeParallel(benchmark::State& state)
{
    const auto raw = synthetic_raw(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(type_table(raw));
    }
}

} // namespace

BENCHMARK(BM_FdSerial)->Args({12, 20000})->Args({24, 20000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FdParallel)->Args({12, 20000})->Args({24, 20000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KeysSerial)->Args({24, 20000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KeysParallel)->Args({24, 20000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TypeSerial)->Args({12, 50000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TypeParallel)->Args({12, 50000})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
