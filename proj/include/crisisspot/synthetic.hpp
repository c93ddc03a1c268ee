#pragma once

#include <cstddef>
#include <cstdint>

#include "crisisspot/data_model.hpp"
#include "crisisspot/social_context.hpp"

namespace crisisspot {

/// Knobs for the desk-scale corpus. Embeddings are class-conditional
/// Gaussians; social fields (crisis words, emotion words, user history,
/// engagement) carry label signal scaled by `scf_signal`.
struct SyntheticConfig {
    std::uint64_t seed = 0;
    std::size_t n_samples = 100;
    Task task = Task::informative;
    CorpusDims dims{8, 16, 16, 16};
    /// Distance between class means of the text/image embeddings, in units of
    /// the per-sample noise standard deviation.
    double separation = 4.0;
    /// Same for the joint (graph) embeddings; negative means "use separation".
    double joint_separation = -1.0;
    /// Per-sample noise std of the joint embeddings, relative to the unit
    /// noise of the token embeddings.
    double joint_noise = 0.25;
    double token_noise = 1.0;
    /// 0: social features independent of the label; 1: strongly informative.
    double scf_signal = 0.5;
    /// Humanitarian classes in use (labels 1..num_classes).
    int num_classes = kHumanitarianClasses;
    double val_fraction = 0.2;
    double test_fraction = 0.0;
    /// 0 picks n_samples / 5 (at least 2).
    std::size_t n_users = 0;
};

struct SyntheticCorpus {
    Corpus corpus;
    social::Lexicons lexicons;
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg);

/// Lexicons matching the generator's vocabulary.
social::Lexicons synthetic_lexicons();

}  // namespace crisisspot
