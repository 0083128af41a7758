#ifndef WNDUMA_PARAMS_HPP
#define WNDUMA_PARAMS_HPP

#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "wnduma/tensor.hpp"

namespace wnduma {

// The model runs in fp64 throughout.
using Mat = Matrix<double>;
using Tensor = Var<double>;
using DTape = Tape<double>;
using Param = Parameter<double>;

/// Owns every learnable tensor of a model. Element addresses are stable, so
/// modules keep raw `Param*` handles into the store.
class ParameterStore {
public:
    ParameterStore() = default;
    ParameterStore(const ParameterStore&) = delete;
    ParameterStore& operator=(const ParameterStore&) = delete;

    Param& add(std::string name, Mat value, bool decay);
    Param& get(const std::string& name);
    const Param& get(const std::string& name) const;
    Param* find(const std::string& name);

    /// Registration order.
    std::vector<Param*> all();
    std::vector<const Param*> all() const;
    std::size_t size() const { return params_.size(); }
    std::size_t element_count() const;

    void zero_grad();
    std::vector<Mat> snapshot() const;
    void restore(const std::vector<Mat>& values);

private:
    std::deque<Param> params_;
    std::map<std::string, std::size_t> index_;
};

/// N(0, std^2) entries from `rng`.
Mat random_normal(Index rows, Index cols, double stddev, std::mt19937_64& rng);
/// Glorot-normal initialization for a fan_in x fan_out projection.
Mat xavier_normal(Index rows, Index cols, std::mt19937_64& rng);

}  // namespace wnduma

#endif  // WNDUMA_PARAMS_HPP
