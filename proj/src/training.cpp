#include "wnduma/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>

namespace wnduma {

TrainConfig TrainConfig::reference() {
    return TrainConfig{};
}

TrainConfig TrainConfig::desk() {
    TrainConfig c;
    c.epochs = 1000;
    c.max_steps = 500;
    c.batch_size = 8;
    c.peak_lr = 1e-3;
    c.eval_every_steps = 50;
    return c;
}

void validate(const TrainConfig& c) {
    if (!(c.warmup_fraction > 0.0 && c.warmup_fraction < 1.0))
        throw ParameterError("train: warmup_fraction must lie in (0, 1)");
    if (!(c.grad_clip_norm > 0.0)) throw ParameterError("train: grad_clip_norm must be positive");
    if (c.batch_size < 1) throw ParameterError("train: batch_size must be at least 1");
    if (c.eval_every_steps < 1) throw ParameterError("train: eval_every_steps must be at least 1");
    if (!(c.peak_lr > 0.0)) throw ParameterError("train: peak_lr must be positive");
    if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw ParameterError("train: dropout must lie in [0, 1)");
    if (c.epochs == 0 && c.max_steps == 0) throw ParameterError("train: need epochs or max_steps");
}

std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& config) {
    const auto w = static_cast<std::size_t>(std::floor(config.warmup_fraction * static_cast<double>(total_steps)));
    return std::max<std::size_t>(w, 1);
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& config) {
    if (step > total_steps) {
        std::clog << "warning: lr_at step " << step << " beyond total " << total_steps << "; using 0\n";
        return 0.0;
    }
    if (step >= total_steps) return 0.0;
    const std::size_t warm = warmup_steps(total_steps, config);
    if (step < warm) return config.peak_lr * static_cast<double>(step) / static_cast<double>(warm);
    return config.peak_lr * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warm);
}

double global_grad_norm(std::span<Param* const> params) {
    double sq = 0;
    for (const Param* p : params) sq += p->grad.squaredNorm();
    return std::sqrt(sq);
}

double clip_global_norm(std::span<Param* const> params, double max_norm) {
    if (!(max_norm > 0.0)) throw ParameterError("clip_global_norm: max_norm must be positive");
    const double norm = global_grad_norm(params);
    if (norm > max_norm) {
        const double factor = max_norm / norm;
        for (Param* p : params) p->grad *= factor;
    }
    return norm;
}

void AdamWState::reset(std::span<Param* const> params) {
    first_moment.clear();
    second_moment.clear();
    for (const Param* p : params) {
        first_moment.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
        second_moment.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
    step = 0;
}

void adamw_step(std::span<Param* const> params, AdamWState& state, double lr, const AdamWOptions& o) {
    if (state.first_moment.size() != params.size()) state.reset(params);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Param& p = *params[i];
        if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
            state.first_moment[i].rows() != p.value.rows() || state.first_moment[i].cols() != p.value.cols())
            throw DimensionError("adamw_step: state/gradient shape mismatch for '" + p.name + "'");
        if (!p.grad.allFinite()) throw NumericalError("adamw_step: non-finite gradient in '" + p.name + "'");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(o.beta1, t);
    const double c2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Param& p = *params[i];
        Mat& m = state.first_moment[i];
        Mat& v = state.second_moment[i];
        if (p.decay && o.weight_decay != 0.0) p.value *= (1.0 - lr * o.weight_decay);
        m = o.beta1 * m + (1.0 - o.beta1) * p.grad;
        v = o.beta2 * v + (1.0 - o.beta2) * p.grad.cwiseProduct(p.grad);
        p.value.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + o.eps);
    }
}

double batch_loss_and_grad(Model& model, std::span<const data::EncodedInstance* const> batch, std::mt19937_64& rng) {
    if (batch.empty()) throw ValidationError("batch_loss_and_grad: empty batch");
    model.parameters().zero_grad();
    DTape tape;
    Tensor total;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& inst = *batch[i];
        if (!inst.label) throw ValidationError("training instance '" + inst.id + "' has no label");
        Tensor loss = cross_entropy_softmax(model.instance_logits(tape, inst.options, true, rng), *inst.label);
        total = i == 0 ? loss : add(total, loss);
    }
    Tensor mean = scale(total, 1.0 / static_cast<double>(batch.size()));
    const double value = mean.value()(0, 0);
    if (!std::isfinite(value)) return value;
    tape.backward(mean);
    return value;
}

TrainResult train(Model& model, const TrainConfig& config, std::uint64_t seed,
                  std::span<const data::EncodedInstance> train_set, std::span<const data::EncodedInstance> dev_set) {
    validate(config);
    if (train_set.empty()) throw ValidationError("train: empty training set");
    if (dev_set.empty()) throw ValidationError("train: empty dev set");

    const std::size_t per_epoch = (train_set.size() + config.batch_size - 1) / config.batch_size;
    const std::size_t total = config.max_steps > 0 ? config.max_steps : config.epochs * per_epoch;
    std::mt19937_64 shuffle_rng(seed);
    std::mt19937_64 dropout_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    model.set_dropout(config.dropout);
    const std::vector<Param*> params = model.parameters().all();
    AdamWState state;
    state.reset(params);
    const AdamWOptions adam{config.beta1, config.beta2, config.adam_eps, config.weight_decay};

    TrainResult result;
    RunRecord& rec = result.record;
    rec.seed = seed;
    rec.total_steps = total;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<const data::EncodedInstance*> batch;
    double loss_since_eval = 0;
    std::size_t steps_since_eval = 0;
    bool have_best = false;

    std::size_t step = 0;
    while (step < total) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < order.size() && step < total; start += config.batch_size) {
            batch.clear();
            for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
                batch.push_back(&train_set[order[i]]);
            const double lr = lr_at(step, total, config);
            const double loss = batch_loss_and_grad(model, batch, dropout_rng);
            if (!std::isfinite(loss))
                throw NumericalError("train: non-finite loss at step " + std::to_string(step + 1));
            clip_global_norm(params, config.grad_clip_norm);
            adamw_step(params, state, lr, adam);
            ++step;
            rec.step_losses.push_back(loss);
            loss_since_eval += loss;
            ++steps_since_eval;

            if (step % config.eval_every_steps == 0 || step == total) {
                EvalPoint point;
                point.step = step;
                point.train_loss = loss_since_eval / static_cast<double>(steps_since_eval);
                point.dev_accuracy = evaluate(model, dev_set);
                point.lr = lr;
                rec.curve.push_back(point);
                loss_since_eval = 0;
                steps_since_eval = 0;
                if (!have_best || point.dev_accuracy > rec.best_dev_accuracy) {
                    have_best = true;
                    rec.best_dev_accuracy = point.dev_accuracy;
                    rec.best_step = step;
                    result.best_parameters = model.parameters().snapshot();
                }
            }
        }
    }
    model.parameters().restore(result.best_parameters);
    return result;
}

std::vector<int> predict_all(const Model& model, std::span<const data::EncodedInstance> dataset) {
    std::vector<int> out;
    out.reserve(dataset.size());
    for (const auto& inst : dataset) out.push_back(model.predict(inst));
    return out;
}

double evaluate(const Model& model, std::span<const data::EncodedInstance> dataset) {
    if (dataset.empty()) throw ValidationError("evaluate: empty dataset");
    std::size_t correct = 0;
    for (const auto& inst : dataset) {
        if (!inst.label) throw ValidationError("evaluate: instance '" + inst.id + "' has no label");
        if (model.predict(inst) == *inst.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

SeedSummary run_seeds(const TrainConfig& config, const ModelFactory& make_model,
                      std::span<const data::EncodedInstance> train_set, std::span<const data::EncodedInstance> dev_set,
                      const RunCallback& on_run) {
    if (config.seeds.empty()) throw ParameterError("run_seeds: no seeds given");
    SeedSummary summary;
    for (std::uint64_t seed : config.seeds) {
        try {
            Model model = make_model(seed);
            TrainResult r = train(model, config, seed, train_set, dev_set);
            if (on_run) on_run(r.record, model);
            summary.runs.push_back(std::move(r.record));
        } catch (const Error& e) {
            summary.error = "seed " + std::to_string(seed) + ": " + e.what();
            break;
        }
    }
    if (!summary.runs.empty()) {
        double sum = 0;
        for (const auto& r : summary.runs) sum += r.best_dev_accuracy;
        const double n = static_cast<double>(summary.runs.size());
        summary.mean_best_dev_accuracy = sum / n;
        double sq = 0;
        for (const auto& r : summary.runs) sq += std::pow(r.best_dev_accuracy - summary.mean_best_dev_accuracy, 2);
        summary.stddev_best_dev_accuracy = summary.runs.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
    }
    return summary;
}

std::vector<int> majority_vote(std::span<const std::vector<int>> predictions) {
    if (predictions.empty()) throw ValidationError("majority_vote: need at least one model");
    const std::size_t n = predictions.front().size();
    for (std::size_t m = 1; m < predictions.size(); ++m)
        if (predictions[m].size() != n)
            throw ValidationError("majority_vote: model " + std::to_string(m) + " has " +
                                  std::to_string(predictions[m].size()) + " predictions, model 0 has " +
                                  std::to_string(n));
    std::vector<int> out(n);
    std::map<int, std::size_t> votes;
    for (std::size_t i = 0; i < n; ++i) {
        votes.clear();
        std::size_t top = 0;
        for (const auto& model : predictions) top = std::max(top, ++votes[model[i]]);
        for (const auto& model : predictions) {
            if (votes[model[i]] == top) {
                out[i] = model[i];
                break;
            }
        }
    }
    return out;
}

}  // namespace wnduma
