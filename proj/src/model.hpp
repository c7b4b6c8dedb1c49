#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "embedding.hpp"
#include "metaconcept.hpp"

namespace hce {

struct ModelConfig {
    int embed_dim = 64;
    int feat_dim = 128;
    int hidden = 32;
};

// All learnable state: one embedding per concept, the object encoder,
// and one classifier head per metaconcept. Parameters live in a single
// flat vector so the optimizer and gradient checks can treat the model
// as one array.
class ModelState {
  public:
    ModelState(ModelConfig config, std::vector<std::string> concept_names,
               std::vector<std::string> metaconcept_names);

    // Gaussian init for embeddings/encoder, Xavier-uniform for the heads.
    void init_random(std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    const std::vector<std::string>& concept_names() const { return concept_names_; }
    const std::vector<std::string>& metaconcept_names() const { return metaconcept_names_; }
    bool has_concept(const std::string& name) const;
    bool has_metaconcept(const std::string& name) const;
    int concept_index(const std::string& name) const;  // throws on unknown

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    Vec concept_vec(int idx) const;
    Vec concept_vec(const std::string& name) const;
    ObjectEncoder encoder() const;
    const MetaconceptOperator& metaconcept_op() const { return op_; }
    Vec metaconcept_params(const std::string& name) const;

    // Gradient-buffer views (buffer must have params().size() entries).
    MutVec concept_slice(std::span<double> buf, int idx) const;
    MutVec encoder_weight_slice(std::span<double> buf) const;
    MutVec encoder_bias_slice(std::span<double> buf) const;
    MutVec metaconcept_slice(std::span<double> buf, const std::string& name) const;

    // Checkpoint I/O. Writes are atomic (temp file + rename) and numbers
    // round-trip exactly.
    void save(const std::string& path) const;
    static ModelState load(const std::string& path);

  private:
    std::size_t concept_offset(int idx) const;
    std::size_t metaconcept_offset(const std::string& name) const;

    ModelConfig config_;
    MetaconceptOperator op_;
    std::vector<std::string> concept_names_;
    std::vector<std::string> metaconcept_names_;
    std::map<std::string, int> concept_index_;
    std::map<std::string, int> metaconcept_index_;
    std::size_t enc_weight_off_ = 0;
    std::size_t enc_bias_off_ = 0;
    std::size_t meta_off_ = 0;
    std::vector<double> params_;
};

}  // namespace hce
