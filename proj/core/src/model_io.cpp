#include "lusgate/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "lusgate/errors.hpp"

static_assert(std::endian::native == std::endian::little, "model container assumes a little-endian host");
static_assert(sizeof(double) == 8, "model container stores IEEE-754 binary64 weights");

namespace lusgate {
namespace {

constexpr char kMagic[8] = {'l', 'u', 's', 'g', 'm', 'd', 'l', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void put(std::ostream& os, T value) {
    put_bytes(os, &value, sizeof value);
}

void put_f64s(std::ostream& os, const std::vector<double>& v) {
    put<std::uint64_t>(os, v.size());
    if (!v.empty()) put_bytes(os, v.data(), v.size() * sizeof(double));
}

void get_bytes(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is) throw IoError("model file truncated");
}

template <typename T>
T get(std::istream& is) {
    T value;
    get_bytes(is, &value, sizeof value);
    return value;
}

std::vector<double> get_f64s(std::istream& is, std::uint64_t max_count) {
    auto n = get<std::uint64_t>(is);
    if (n > max_count) throw IoError("model file declares an implausible array size");
    std::vector<double> v(n);
    if (n > 0) get_bytes(is, v.data(), n * sizeof(double));
    return v;
}

}  // namespace

void save_model(const nn::ModelParams& params, const std::filesystem::path& path) {
    params.check_matches_spec();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open model file for writing: " + path.string());

    put_bytes(os, kMagic, sizeof kMagic);
    put(os, kVersion);

    const std::string spec_text = params.spec.canonical_text();
    put<std::uint64_t>(os, spec_text.size());
    put_bytes(os, spec_text.data(), spec_text.size());
    put(os, params.spec_hash);

    put(os, params.meta.seed);
    put<std::int32_t>(os, params.meta.epochs);
    put(os, params.meta.final_loss);
    put<std::int64_t>(os, params.meta.n_train);

    put<std::uint64_t>(os, params.blocks.size());
    for (const auto& blk : params.blocks) {
        put_f64s(os, blk.w);
        put_f64s(os, blk.b);
    }
    if (!os) throw IoError("failed writing model file: " + path.string());
}

nn::ModelParams load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open model file: " + path.string());

    char magic[8];
    get_bytes(is, magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError("not a model file: " + path.string());
    auto version = get<std::uint32_t>(is);
    if (version != kVersion) throw IoError("unsupported model container version " + std::to_string(version));

    auto spec_len = get<std::uint64_t>(is);
    if (spec_len > (1u << 20)) throw IoError("model file declares an implausible spec length");
    std::string spec_text(spec_len, '\0');
    if (spec_len > 0) get_bytes(is, spec_text.data(), spec_len);

    nn::ModelParams params;
    params.spec = nn::NetworkSpec::parse(spec_text);
    params.spec_hash = get<std::uint64_t>(is);
    if (params.spec_hash != params.spec.hash())
        throw IoError("model file spec hash does not match its spec text");

    params.meta.seed = get<std::uint64_t>(is);
    params.meta.epochs = get<std::int32_t>(is);
    params.meta.final_loss = get<double>(is);
    params.meta.n_train = get<std::int64_t>(is);

    auto n_blocks = get<std::uint64_t>(is);
    if (n_blocks != params.spec.layers.size())
        throw IoError("model file block count does not match its spec");
    constexpr std::uint64_t kMaxScalars = 1ull << 28;  // 2 GiB of doubles
    params.blocks.resize(n_blocks);
    for (auto& blk : params.blocks) {
        blk.w = get_f64s(is, kMaxScalars);
        blk.b = get_f64s(is, kMaxScalars);
    }
    params.check_matches_spec();
    return params;
}

}  // namespace lusgate
