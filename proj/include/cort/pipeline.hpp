#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cort/bm25.hpp"
#include "cort/synth.hpp"
#include "cort/train.hpp"

namespace cort {

/// End-to-end toy experiment: generate data, build the term index, train the
/// head on BM25-sampled negatives, encode, index, search, fuse and evaluate.
struct PipelineConfig {
    std::string out_dir;
    SynthConfig synth;
    Bm25Params bm25;
    TrainConfig train;
    std::uint32_t repr_dim = 16;
    std::uint32_t partitions = 4;
    std::size_t search_k = 1000;
    std::vector<std::size_t> eval_cuts = {10, 20, 50, 100, 200, 500, 1000};
    std::vector<std::size_t> study_x = {8, 16, 32, 64, 128, 256, 512};

    PipelineConfig() {
        // Desk-scale training settings; the TrainConfig defaults target the
        // full-size regime and barely move a head in a few hundred steps.
        train.learning_rate = 0.02;
        train.warmup_steps = 20;
        train.accum_steps = 4;
    }
};

struct PipelineResult {
    std::vector<double> train_epoch_losses;
    double bm25_recall50 = 0.0;
    double cort_recall50 = 0.0;
    double fused_recall50 = 0.0;
    double bm25_recall_at_k = 0.0;   // recall at search depth
    double fused_recall_at_k = 0.0;
    std::optional<double> bm25_saturation_x;
    std::optional<double> fused_saturation_x;
    std::string report_path;
};

PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace cort
