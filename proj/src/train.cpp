#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "executor.hpp"
#include "program.hpp"
#include "json.hpp"

namespace hce {

using nlohmann::json;

std::string TrainConfig::to_json_text() const {
    json j;
    j["lr"] = lr;
    j["beta1"] = beta1;
    j["beta2"] = beta2;
    j["eps"] = eps;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["clip_norm"] = clip_norm;
    j["metaconcept_mix"] = metaconcept_mix;
    j["warmup_epochs"] = warmup_epochs;
    j["seed"] = seed;
    j["embed_dim"] = model.embed_dim;
    j["hidden"] = model.hidden;
    return j.dump(2);
}

TrainConfig TrainConfig::from_json_text(const std::string& text) {
    json j = json::parse(text);
    TrainConfig c;
    c.lr = j.value("lr", c.lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.metaconcept_mix = j.value("metaconcept_mix", c.metaconcept_mix);
    c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
    c.seed = j.value("seed", c.seed);
    c.model.embed_dim = j.value("embed_dim", c.model.embed_dim);
    c.model.hidden = j.value("hidden", c.model.hidden);
    if (c.lr <= 0 || c.batch_size < 1 || c.epochs < 0 || c.metaconcept_mix > 1.0 ||
        c.warmup_epochs < 0)
        throw std::invalid_argument("invalid training configuration");
    return c;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

AdamOptimizer::AdamOptimizer(std::size_t n, double lr, double beta1, double beta2,
                             double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void AdamOptimizer::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw std::invalid_argument("optimizer size mismatch");
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, (double)t_);
    double bc2 = 1.0 - std::pow(beta2_, (double)t_);
    for (std::size_t i = 0; i < m_.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
    }
}

ModelState make_model(const Dataset& ds, const ModelConfig& config, std::uint64_t seed) {
    std::set<std::string> metas;
    for (const auto& item : ds.items) {
        Program p = parse_program(item.program);
        if (p.root->kind == NodeKind::meta_verify) metas.insert(p.root->metaconcept);
    }
    ModelConfig cfg = config;
    if (!ds.scenes.empty() && !ds.scenes.front().objects.empty())
        cfg.feat_dim = (int)ds.scenes.front().objects.front().features.size();
    ModelState model(cfg, ds.ontology.concepts,
                     std::vector<std::string>(metas.begin(), metas.end()));
    model.init_random(seed);
    return model;
}

namespace {

struct CompiledItem {
    Program program;
    const Scene* scene = nullptr;
    bool answer = false;
};

}  // namespace

TrainResult train_model(const Dataset& ds, const std::string& partition,
                        const TrainConfig& config, ModelState& model) {
    if (config.warmup_epochs > 0) {
        // Visual-only phase, then the requested schedule with a fresh
        // optimizer; the phases use distinct shuffling streams.
        TrainConfig warm = config;
        warm.warmup_epochs = 0;
        warm.epochs = config.warmup_epochs;
        warm.metaconcept_mix = 0.0;
        TrainResult first = train_model(ds, partition, warm, model);
        TrainConfig rest = config;
        rest.warmup_epochs = 0;
        rest.seed = config.seed + 7777;
        TrainResult second = train_model(ds, partition, rest, model);
        first.epoch_losses.insert(first.epoch_losses.end(),
                                  second.epoch_losses.begin(),
                                  second.epoch_losses.end());
        first.steps += second.steps;
        return first;
    }
    if (!ds.partitions.count(partition))
        throw std::invalid_argument("unknown partition: " + partition);
    std::map<std::string, const Scene*> by_id;
    for (const auto& s : ds.scenes) by_id[s.id] = &s;

    std::vector<CompiledItem> items;
    for (auto idx : ds.partitions.at(partition)) {
        const QAItem& qa = ds.items[idx];
        if (qa.kind == QAItem::Kind::referential)
            throw std::invalid_argument("referential items are evaluation-only");
        CompiledItem ci;
        ci.program = parse_program(qa.program);
        ci.scene = qa.scene_id.empty() ? nullptr : by_id.at(qa.scene_id);
        ci.answer = qa.answer;
        items.push_back(std::move(ci));
    }
    if (items.empty()) throw std::invalid_argument("empty training partition");

    // Pools for the metaconcept_mix rebalancing; a negative mix keeps the
    // natural composition (each item exactly once per epoch).
    std::vector<std::size_t> meta_pool, visual_pool;
    for (std::size_t i = 0; i < items.size(); ++i)
        (items[i].program.root->kind == NodeKind::meta_verify ? meta_pool : visual_pool)
            .push_back(i);
    if (config.metaconcept_mix > 0.0 && meta_pool.empty())
        throw std::invalid_argument("metaconcept_mix > 0 but no metaconcept items");
    if (config.metaconcept_mix >= 0.0 && config.metaconcept_mix < 1.0 &&
        visual_pool.empty())
        throw std::invalid_argument("metaconcept_mix < 1 but no visual items");

    TrainResult result;
    AdamOptimizer opt(model.params().size(), config.lr, config.beta1, config.beta2,
                      config.eps);
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad(model.params().size());

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.metaconcept_mix >= 0.0) {
            std::size_t n_meta = (std::size_t)std::llround(config.metaconcept_mix *
                                                           (double)items.size());
            n_meta = std::min(n_meta, items.size());
            order.clear();
            auto draw = [&](const std::vector<std::size_t>& pool, std::size_t n) {
                if (n == 0) return;
                std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
                for (std::size_t i = 0; i < n; ++i) order.push_back(pool[d(rng)]);
            };
            draw(meta_pool, n_meta);
            draw(visual_pool, items.size() - n_meta);
        }
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += (std::size_t)config.batch_size) {
            std::size_t end =
                std::min(order.size(), start + (std::size_t)config.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const CompiledItem& ci = items[order[i]];
                batch_loss +=
                    execute_backward(ci.program, ci.scene, model, ci.answer, grad);
            }
            double inv = 1.0 / (double)(end - start);
            batch_loss *= inv;
            for (double& g : grad) g *= inv;
            long batch_id = opt.steps_taken();
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("non-finite loss in batch " +
                                         std::to_string(batch_id));
            double norm2 = 0.0;
            for (double g : grad) norm2 += g * g;
            if (!std::isfinite(norm2))
                throw std::runtime_error("non-finite gradient in batch " +
                                         std::to_string(batch_id));
            if (config.clip_norm > 0.0 && norm2 > config.clip_norm * config.clip_norm) {
                double scale = config.clip_norm / std::sqrt(norm2);
                for (double& g : grad) g *= scale;
            }
            opt.step(model.params(), grad);
            epoch_loss += batch_loss * (double)(end - start);
        }
        result.epoch_losses.push_back(epoch_loss / (double)order.size());
    }
    result.steps = opt.steps_taken();
    return result;
}

EvalReport evaluate(const ModelState& model, const Dataset& ds,
                    const std::string& partition) {
    if (!ds.partitions.count(partition))
        throw std::invalid_argument("unknown partition: " + partition);
    std::map<std::string, const Scene*> by_id;
    for (const auto& s : ds.scenes) by_id[s.id] = &s;

    EvalReport report;
    std::size_t bool_correct = 0, ref_correct = 0;
    std::map<std::string, std::pair<std::size_t, std::size_t>> meta;  // correct, total
    for (auto idx : ds.partitions.at(partition)) {
        const QAItem& qa = ds.items[idx];
        Program program = parse_program(qa.program);
        const Scene* scene = qa.scene_id.empty() ? nullptr : by_id.at(qa.scene_id);
        ExecutionResult r = execute(program, scene, model);
        Prediction pred;
        pred.item_index = idx;
        if (qa.kind == QAItem::Kind::referential) {
            pred.predicted_index = r.index;
            pred.correct = r.index == qa.target;
            ++report.n_referential;
            ref_correct += pred.correct ? 1 : 0;
        } else {
            pred.score = r.score;
            pred.correct = (r.score >= 0.5) == qa.answer;
            ++report.n_boolean;
            bool_correct += pred.correct ? 1 : 0;
            if (program.root->kind == NodeKind::meta_verify) {
                auto& [c, t] = meta[program.root->metaconcept];
                ++t;
                c += pred.correct ? 1 : 0;
            }
        }
        report.predictions.push_back(pred);
    }
    if (report.n_boolean)
        report.accuracy = (double)bool_correct / (double)report.n_boolean;
    if (report.n_referential)
        report.recall_at_1 = (double)ref_correct / (double)report.n_referential;
    for (const auto& [m, ct] : meta)
        report.per_metaconcept_accuracy[m] = (double)ct.first / (double)ct.second;
    return report;
}

}  // namespace hce
