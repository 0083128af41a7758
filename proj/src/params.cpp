#include "wnduma/params.hpp"

#include <cmath>

namespace wnduma {

Param& ParameterStore::add(std::string name, Mat value, bool decay) {
    if (index_.count(name)) throw ParameterError("parameter '" + name + "' registered twice");
    index_.emplace(name, params_.size());
    Param& p = params_.emplace_back();
    p.name = std::move(name);
    p.value = std::move(value);
    p.decay = decay;
    p.zero_grad();
    return p;
}

Param* ParameterStore::find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second];
}

Param& ParameterStore::get(const std::string& name) {
    if (Param* p = find(name)) return *p;
    throw ParameterError("unknown parameter '" + name + "'");
}

const Param& ParameterStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ParameterError("unknown parameter '" + name + "'");
    return params_[it->second];
}

std::vector<Param*> ParameterStore::all() {
    std::vector<Param*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(&p);
    return out;
}

std::vector<const Param*> ParameterStore::all() const {
    std::vector<const Param*> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(&p);
    return out;
}

std::size_t ParameterStore::element_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

std::vector<Mat> ParameterStore::snapshot() const {
    std::vector<Mat> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value);
    return out;
}

void ParameterStore::restore(const std::vector<Mat>& values) {
    if (values.size() != params_.size())
        throw ParameterError("restore: snapshot holds " + std::to_string(values.size()) + " tensors, store has " +
                             std::to_string(params_.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].rows() != params_[i].value.rows() || values[i].cols() != params_[i].value.cols())
            throw DimensionError("restore: '" + params_[i].name + "' is " + shape_string(params_[i].value) +
                                 ", snapshot has " + shape_string(values[i]));
        params_[i].value = values[i];
    }
}

Mat random_normal(Index rows, Index cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Mat m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

Mat xavier_normal(Index rows, Index cols, std::mt19937_64& rng) {
    return random_normal(rows, cols, std::sqrt(2.0 / static_cast<double>(rows + cols)), rng);
}

}  // namespace wnduma
