#include "model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace hce {

ModelState::ModelState(ModelConfig config, std::vector<std::string> concept_names,
                       std::vector<std::string> metaconcept_names)
    : config_(config),
      concept_names_(std::move(concept_names)),
      metaconcept_names_(std::move(metaconcept_names)) {
    op_.hidden = config_.hidden;
    for (std::size_t i = 0; i < concept_names_.size(); ++i) {
        if (!concept_index_.emplace(concept_names_[i], static_cast<int>(i)).second) {
            throw std::invalid_argument("duplicate concept name: " + concept_names_[i]);
        }
    }
    for (std::size_t i = 0; i < metaconcept_names_.size(); ++i) {
        if (!metaconcept_index_.emplace(metaconcept_names_[i], static_cast<int>(i)).second) {
            throw std::invalid_argument("duplicate metaconcept: " + metaconcept_names_[i]);
        }
    }
    const std::size_t n = static_cast<std::size_t>(config_.embed_dim);
    const std::size_t d = static_cast<std::size_t>(config_.feat_dim);
    enc_weight_off_ = concept_names_.size() * n;
    enc_bias_off_ = enc_weight_off_ + n * d;
    meta_off_ = enc_bias_off_ + n;
    params_.assign(meta_off_ + metaconcept_names_.size() * op_.param_count(), 0.0);
}

void ModelState::init_random(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int n = config_.embed_dim;
    const int d = config_.feat_dim;
    // Coordinates ~ N(0, 1/N): initial norms concentrate near 1 so the
    // denotational probabilities start away from both 0.5 and the tail.
    std::normal_distribution<double> coord(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
    for (std::size_t i = 0; i < enc_weight_off_; ++i) params_[i] = coord(rng);

    std::normal_distribution<double> enc(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
    for (std::size_t i = enc_weight_off_; i < enc_bias_off_; ++i) params_[i] = enc(rng);
    for (std::size_t i = enc_bias_off_; i < meta_off_; ++i) params_[i] = 0.0;

    // Xavier-uniform for each head layer, zero biases.
    const int h = op_.hidden;
    const double lim1 = std::sqrt(6.0 / (kStatsArity + h));
    const double lim2 = std::sqrt(6.0 / (h + 1));
    std::uniform_real_distribution<double> u1(-lim1, lim1);
    std::uniform_real_distribution<double> u2(-lim2, lim2);
    for (std::size_t m = 0; m < metaconcept_names_.size(); ++m) {
        double* p = params_.data() + meta_off_ + m * op_.param_count();
        for (int i = 0; i < h * kStatsArity; ++i) p[i] = u1(rng);
        for (int i = 0; i < h; ++i) p[h * kStatsArity + h + i] = u2(rng);
    }
}

bool ModelState::has_concept(const std::string& name) const {
    return concept_index_.count(name) > 0;
}

bool ModelState::has_metaconcept(const std::string& name) const {
    return metaconcept_index_.count(name) > 0;
}

int ModelState::concept_index(const std::string& name) const {
    auto it = concept_index_.find(name);
    if (it == concept_index_.end()) {
        throw std::out_of_range("unknown concept: " + name);
    }
    return it->second;
}

std::size_t ModelState::concept_offset(int idx) const {
    return static_cast<std::size_t>(idx) * config_.embed_dim;
}

std::size_t ModelState::metaconcept_offset(const std::string& name) const {
    auto it = metaconcept_index_.find(name);
    if (it == metaconcept_index_.end()) {
        throw std::out_of_range("unknown metaconcept: " + name);
    }
    return meta_off_ + static_cast<std::size_t>(it->second) * op_.param_count();
}

Vec ModelState::concept_vec(int idx) const {
    return Vec(params_.data() + concept_offset(idx), config_.embed_dim);
}

Vec ModelState::concept_vec(const std::string& name) const {
    return concept_vec(concept_index(name));
}

ObjectEncoder ModelState::encoder() const {
    return ObjectEncoder{
        config_.feat_dim, config_.embed_dim,
        Vec(params_.data() + enc_weight_off_,
            static_cast<std::size_t>(config_.feat_dim) * config_.embed_dim),
        Vec(params_.data() + enc_bias_off_, config_.embed_dim)};
}

Vec ModelState::metaconcept_params(const std::string& name) const {
    return Vec(params_.data() + metaconcept_offset(name), op_.param_count());
}

MutVec ModelState::concept_slice(std::span<double> buf, int idx) const {
    return buf.subspan(concept_offset(idx), config_.embed_dim);
}

MutVec ModelState::encoder_weight_slice(std::span<double> buf) const {
    return buf.subspan(enc_weight_off_,
                       static_cast<std::size_t>(config_.feat_dim) * config_.embed_dim);
}

MutVec ModelState::encoder_bias_slice(std::span<double> buf) const {
    return buf.subspan(enc_bias_off_, config_.embed_dim);
}

MutVec ModelState::metaconcept_slice(std::span<double> buf,
                                     const std::string& name) const {
    return buf.subspan(metaconcept_offset(name), op_.param_count());
}

void ModelState::save(const std::string& path) const {
    json doc;
    doc["dim"] = config_.embed_dim;
    doc["feat_dim"] = config_.feat_dim;
    doc["hidden"] = config_.hidden;
    json concepts = json::object();
    for (std::size_t i = 0; i < concept_names_.size(); ++i) {
        const Vec v = concept_vec(static_cast<int>(i));
        concepts[concept_names_[i]] = std::vector<double>(v.begin(), v.end());
    }
    doc["concepts"] = std::move(concepts);

    const ObjectEncoder enc = encoder();
    json rows = json::array();
    for (int i = 0; i < enc.embed_dim; ++i) {
        rows.push_back(std::vector<double>(
            enc.weight.begin() + static_cast<std::size_t>(i) * enc.feat_dim,
            enc.weight.begin() + static_cast<std::size_t>(i + 1) * enc.feat_dim));
    }
    doc["encoder"] = {{"weight", std::move(rows)},
                      {"bias", std::vector<double>(enc.bias.begin(), enc.bias.end())}};

    json metas = json::object();
    const int h = op_.hidden;
    for (const auto& name : metaconcept_names_) {
        const Vec p = metaconcept_params(name);
        json w1 = json::array();
        for (int j = 0; j < h; ++j) {
            w1.push_back(std::vector<double>(p.begin() + j * kStatsArity,
                                             p.begin() + (j + 1) * kStatsArity));
        }
        json layer1 = {{"weight", std::move(w1)},
                       {"bias", std::vector<double>(p.begin() + h * kStatsArity,
                                                    p.begin() + h * kStatsArity + h)}};
        json w2 = json::array();
        w2.push_back(std::vector<double>(p.begin() + h * kStatsArity + h,
                                         p.begin() + h * kStatsArity + 2 * h));
        json layer2 = {{"weight", std::move(w2)},
                       {"bias", std::vector<double>{p[p.size() - 1]}}};
        metas[name] = {{"layers", json::array({layer1, layer2})}};
    }
    doc["metaconcepts"] = std::move(metas);

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << doc.dump(2) << '\n';
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw std::runtime_error("cannot rename checkpoint into place: " + path);
    }
}

ModelState ModelState::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    json doc = json::parse(in);

    ModelConfig cfg;
    cfg.embed_dim = doc.at("dim").get<int>();
    cfg.feat_dim = doc.at("feat_dim").get<int>();
    cfg.hidden = doc.at("hidden").get<int>();

    std::vector<std::string> concepts;
    for (auto it = doc.at("concepts").begin(); it != doc.at("concepts").end(); ++it) {
        concepts.push_back(it.key());
    }
    std::vector<std::string> metas;
    for (auto it = doc.at("metaconcepts").begin(); it != doc.at("metaconcepts").end();
         ++it) {
        metas.push_back(it.key());
    }

    ModelState m(cfg, std::move(concepts), std::move(metas));
    for (std::size_t i = 0; i < m.concept_names_.size(); ++i) {
        const auto coords =
            doc["concepts"][m.concept_names_[i]].get<std::vector<double>>();
        if (static_cast<int>(coords.size()) != cfg.embed_dim) {
            throw std::runtime_error("checkpoint concept dimension mismatch");
        }
        std::copy(coords.begin(), coords.end(),
                  m.params_.begin() + m.concept_offset(static_cast<int>(i)));
    }
    const auto& enc = doc.at("encoder");
    std::size_t off = m.enc_weight_off_;
    for (const auto& row : enc.at("weight")) {
        for (const auto& x : row) m.params_[off++] = x.get<double>();
    }
    if (off != m.enc_bias_off_) throw std::runtime_error("checkpoint encoder shape mismatch");
    for (const auto& x : enc.at("bias")) m.params_[off++] = x.get<double>();

    const int h = cfg.hidden;
    for (const auto& name : m.metaconcept_names_) {
        const auto& layers = doc["metaconcepts"][name].at("layers");
        double* p = m.params_.data() + m.metaconcept_offset(name);
        std::size_t k = 0;
        for (const auto& row : layers.at(0).at("weight")) {
            for (const auto& x : row) p[k++] = x.get<double>();
        }
        for (const auto& x : layers.at(0).at("bias")) p[k++] = x.get<double>();
        for (const auto& row : layers.at(1).at("weight")) {
            for (const auto& x : row) p[k++] = x.get<double>();
        }
        p[k++] = layers.at(1).at("bias").at(0).get<double>();
        if (k != m.op_.param_count()) {
            throw std::runtime_error("checkpoint metaconcept shape mismatch");
        }
        (void)h;
    }
    return m;
}

}  // namespace hce
