#ifndef WNDUMA_TEST_UTIL_HPP
#define WNDUMA_TEST_UTIL_HPP

#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>
#include <string>

#include "wnduma/data.hpp"
#include "wnduma/params.hpp"

namespace wnduma::test {

inline Mat randn(Index r, Index c, std::mt19937_64& rng, double s = 1.0) { return random_normal(r, c, s, rng); }

inline Param make_param(const std::string& name, Mat value) {
    Param p;
    p.name = name;
    p.value = std::move(value);
    p.zero_grad();
    return p;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("wnduma_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// [CLS] p.. [SEP] o.. [SEP] [PAD]*pad
inline data::ModelInput make_input(const std::vector<Index>& passage, const std::vector<Index>& option, int pad) {
    data::ModelInput in;
    auto push = [&](Index id, Index type) {
        in.token_ids.push_back(id);
        in.token_type_ids.push_back(type);
    };
    push(data::Vocabulary::kCls, 0);
    for (Index id : passage) push(id, 0);
    push(data::Vocabulary::kSep, 0);
    for (Index id : option) push(id, 1);
    push(data::Vocabulary::kSep, 1);
    for (int i = 0; i < pad; ++i) push(data::Vocabulary::kPad, 1);
    in.attention_mask.resize(in.length());
    for (Index i = 0; i < in.length(); ++i) in.attention_mask(i) = in.token_ids[static_cast<std::size_t>(i)] != data::Vocabulary::kPad;
    return in;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

}  // namespace wnduma::test

#endif  // WNDUMA_TEST_UTIL_HPP
