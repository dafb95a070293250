#include "sgt/dataset.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sgt/errors.hpp"
#include "sgt/random.hpp"
#include "sgt/tensor_io.hpp"

namespace sgt {

void SyntheticTaskSpec::validate() const {
    if (n_prototypes < 2) throw ConfigError("need at least 2 prototypes to pose none-examples");
    if (n_answers < n_prototypes + 1) {
        throw ConfigError("n_prototypes must be <= n_answers - 1 (one slot is the none answer); got " +
                          std::to_string(n_prototypes) + " prototypes for " +
                          std::to_string(n_answers) + " answers");
    }
    if (vocab < n_prototypes + 2) {
        throw ConfigError("vocab must cover pad, query tokens and at least one filler; need >= " +
                          std::to_string(n_prototypes + 2) + ", got " + std::to_string(vocab));
    }
    if (d_img == 0) throw ConfigError("d_img must be positive");
    if (min_regions == 0 || min_regions > max_regions) {
        throw ConfigError("region bounds need 1 <= min <= max");
    }
    if (min_tokens == 0 || min_tokens > max_tokens) {
        throw ConfigError("token bounds need 1 <= min <= max");
    }
    if (noise_std < 0.0) throw ConfigError("noise_std must be non-negative");
}

Tensor Dataset::example_regions(std::size_t i) const {
    const std::size_t r = spec.max_regions, d = spec.d_img;
    Tensor out({r, d});
    std::memcpy(out.mutable_data(), regions.data() + i * r * d, r * d * sizeof(double));
    return out;
}

std::vector<std::size_t> Dataset::token_ids(std::size_t i) const {
    const std::size_t t = spec.max_tokens;
    std::vector<std::size_t> ids(t);
    for (std::size_t j = 0; j < t; ++j)
        ids[j] = static_cast<std::size_t>(tokens.data()[i * t + j]);
    return ids;
}

Mask Dataset::region_mask(std::size_t i) const {
    const std::size_t r = spec.max_regions, w = r + spec.max_tokens;
    std::vector<std::uint8_t> flags(r);
    for (std::size_t j = 0; j < r; ++j) flags[j] = mask_flags.data()[i * w + j] != 0.0;
    return Mask({r}, flags);
}

Mask Dataset::token_mask(std::size_t i) const {
    const std::size_t r = spec.max_regions, t = spec.max_tokens, w = r + t;
    std::vector<std::uint8_t> flags(t);
    for (std::size_t j = 0; j < t; ++j) flags[j] = mask_flags.data()[i * w + r + j] != 0.0;
    return Mask({t}, flags);
}

VqaBatch Dataset::batch(const std::vector<std::size_t>& ids) const {
    if (ids.empty()) throw ConfigError("batch needs at least one example");
    const std::size_t b = ids.size(), r = spec.max_regions, d = spec.d_img, t = spec.max_tokens;
    Tensor breg({b, r, d});
    Tensor btok({b, t});
    std::vector<std::uint8_t> rflags(b * r), tflags(b * t);
    std::vector<std::size_t> answers(b);
    for (std::size_t k = 0; k < b; ++k) {
        const std::size_t i = ids[k];
        if (i >= size()) throw ConfigError("example index " + std::to_string(i) + " out of range");
        std::memcpy(breg.mutable_data() + k * r * d, regions.data() + i * r * d,
                    r * d * sizeof(double));
        std::memcpy(btok.mutable_data() + k * t, tokens.data() + i * t, t * sizeof(double));
        const double* mrow = mask_flags.data() + i * (r + t);
        for (std::size_t j = 0; j < r; ++j) rflags[k * r + j] = mrow[j] != 0.0;
        for (std::size_t j = 0; j < t; ++j) tflags[k * t + j] = mrow[r + j] != 0.0;
        answers[k] = labels[i];
    }
    return VqaBatch{std::move(breg), Mask({b, r}, std::move(rflags)), std::move(btok),
                    Mask({b, t}, std::move(tflags)), std::move(answers)};
}

std::size_t rule_label(const Tensor& prototypes, const Tensor& regions, const Mask& region_mask,
                       const std::vector<std::size_t>& token_ids, std::size_t n_prototypes) {
    std::size_t query = 0;
    for (std::size_t id : token_ids) {
        if (id >= 1 && id <= n_prototypes) {
            query = id;
            break;
        }
    }
    if (query == 0) throw ContractError("question carries no query token");
    const std::size_t p = query - 1;

    const std::size_t d = prototypes.cols();
    for (std::size_t row = 0; row < regions.rows(); ++row) {
        if (!region_mask.valid(row)) continue;
        std::size_t nearest = 0;
        double best = 0.0;
        for (std::size_t k = 0; k < prototypes.rows(); ++k) {
            double dist = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = regions.data()[row * d + j] - prototypes.data()[k * d + j];
                dist += diff * diff;
            }
            if (k == 0 || dist < best) {
                best = dist;
                nearest = k;
            }
        }
        if (nearest == p) return p;
    }
    return n_prototypes;
}

Dataset generate_dataset(const SyntheticTaskSpec& spec, std::size_t n_train, std::size_t n_val) {
    spec.validate();
    if (n_train == 0 || n_val == 0) throw ConfigError("both splits need at least one example");
    const std::size_t n = n_train + n_val;
    const std::size_t r = spec.max_regions, d = spec.d_img, t = spec.max_tokens;

    Rng rng(spec.seed);
    Dataset ds;
    ds.spec = spec;
    ds.prototypes = Tensor({spec.n_prototypes, d});
    {
        double* p = ds.prototypes.mutable_data();
        for (std::size_t i = 0; i < ds.prototypes.size(); ++i) p[i] = rng.normal();
    }
    ds.regions = Tensor::zeros({n, r, d});
    ds.tokens = Tensor::zeros({n, t});
    ds.mask_flags = Tensor::zeros({n, r + t});
    ds.labels.resize(n);

    double* reg = ds.regions.mutable_data();
    double* tok = ds.tokens.mutable_data();
    double* flg = ds.mask_flags.mutable_data();

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t intent = rng.index(spec.n_prototypes + 1);
        const bool present = intent < spec.n_prototypes;
        const std::size_t p = present ? intent : rng.index(spec.n_prototypes);

        const std::size_t n_r = spec.min_regions + rng.index(r - spec.min_regions + 1);
        const std::size_t m_q = spec.min_tokens + rng.index(t - spec.min_tokens + 1);

        std::vector<std::size_t> sources(n_r);
        for (std::size_t row = 0; row < n_r; ++row) {
            // Draw from the prototypes other than p; none-examples must
            // exclude p entirely, and positives get p planted below.
            std::size_t q = rng.index(spec.n_prototypes - 1);
            if (q >= p) ++q;
            sources[row] = q;
        }
        if (present) sources[rng.index(n_r)] = p;

        for (std::size_t row = 0; row < n_r; ++row) {
            const double* proto = ds.prototypes.data() + sources[row] * d;
            double* dst = reg + (i * r + row) * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] = proto[j] + spec.noise_std * rng.normal();
            flg[i * (r + t) + row] = 1.0;
        }

        const std::size_t query_pos = rng.index(m_q);
        for (std::size_t pos = 0; pos < m_q; ++pos) {
            const std::size_t fillers = spec.vocab - spec.n_prototypes - 1;
            tok[i * t + pos] = pos == query_pos
                                   ? static_cast<double>(p + 1)
                                   : static_cast<double>(spec.n_prototypes + 1 + rng.index(fillers));
            flg[i * (r + t) + r + pos] = 1.0;
        }

        ds.labels[i] = rule_label(ds.prototypes, ds.example_regions(i), ds.region_mask(i),
                                  ds.token_ids(i), spec.n_prototypes);
    }

    ds.train_idx.resize(n_train);
    ds.val_idx.resize(n_val);
    for (std::size_t i = 0; i < n_train; ++i) ds.train_idx[i] = i;
    for (std::size_t i = 0; i < n_val; ++i) ds.val_idx[i] = n_train + i;
    return ds;
}

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void write_index(const std::string& path, const std::vector<std::size_t>& idx) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    for (std::size_t i : idx) os << i << "\n";
}

std::vector<std::size_t> read_index(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path);
    std::vector<std::size_t> idx;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty()) idx.push_back(std::stoull(line));
    }
    return idx;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create dataset directory " + dir + ": " + ec.message());

    {
        std::ofstream os(dir + "/manifest.txt");
        if (!os) throw IoError("cannot write " + dir + "/manifest.txt");
        os << "count=" << ds.size() << "\n";
        os << "n_train=" << ds.train_idx.size() << "\n";
        os << "n_val=" << ds.val_idx.size() << "\n";
        os << "n_prototypes=" << ds.spec.n_prototypes << "\n";
        os << "vocab=" << ds.spec.vocab << "\n";
        os << "n_answers=" << ds.spec.n_answers << "\n";
        os << "d_img=" << ds.spec.d_img << "\n";
        os << "min_regions=" << ds.spec.min_regions << "\n";
        os << "max_regions=" << ds.spec.max_regions << "\n";
        os << "min_tokens=" << ds.spec.min_tokens << "\n";
        os << "max_tokens=" << ds.spec.max_tokens << "\n";
        os << "noise_std=" << fmt_double(ds.spec.noise_std) << "\n";
        os << "seed=" << ds.spec.seed << "\n";
        os << "mask_packing=regions_then_tokens\n";
    }

    save_tensor(dir + "/prototypes.sgt1", ds.prototypes);
    save_tensor(dir + "/regions.sgt1", ds.regions);
    save_tensor(dir + "/tokens.sgt1", ds.tokens);
    save_tensor(dir + "/masks.sgt1", ds.mask_flags);
    Tensor lab({ds.size()});
    for (std::size_t i = 0; i < ds.size(); ++i)
        lab.mutable_data()[i] = static_cast<double>(ds.labels[i]);
    save_tensor(dir + "/labels.sgt1", lab);
    write_index(dir + "/train.idx", ds.train_idx);
    write_index(dir + "/val.idx", ds.val_idx);
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream is(dir + "/manifest.txt");
    if (!is) throw IoError("cannot read " + dir + "/manifest.txt");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto need = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw IoError("manifest missing key " + key);
        return it->second;
    };

    Dataset ds;
    ds.spec.n_prototypes = std::stoull(need("n_prototypes"));
    ds.spec.vocab = std::stoull(need("vocab"));
    ds.spec.n_answers = std::stoull(need("n_answers"));
    ds.spec.d_img = std::stoull(need("d_img"));
    ds.spec.min_regions = std::stoull(need("min_regions"));
    ds.spec.max_regions = std::stoull(need("max_regions"));
    ds.spec.min_tokens = std::stoull(need("min_tokens"));
    ds.spec.max_tokens = std::stoull(need("max_tokens"));
    ds.spec.noise_std = std::stod(need("noise_std"));
    ds.spec.seed = std::stoull(need("seed"));
    ds.spec.validate();

    ds.prototypes = load_tensor(dir + "/prototypes.sgt1");
    ds.regions = load_tensor(dir + "/regions.sgt1");
    ds.tokens = load_tensor(dir + "/tokens.sgt1");
    ds.mask_flags = load_tensor(dir + "/masks.sgt1");
    Tensor lab = load_tensor(dir + "/labels.sgt1");

    const std::size_t count = std::stoull(need("count"));
    if (ds.regions.shape() != Shape{count, ds.spec.max_regions, ds.spec.d_img} ||
        ds.tokens.shape() != Shape{count, ds.spec.max_tokens} ||
        ds.mask_flags.shape() != Shape{count, ds.spec.max_regions + ds.spec.max_tokens} ||
        lab.shape() != Shape{count}) {
        throw IoError("dataset tensor shapes disagree with the manifest in " + dir);
    }
    ds.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        ds.labels[i] = static_cast<std::size_t>(lab.data()[i]);
        if (ds.labels[i] >= ds.spec.n_answers) throw IoError("label out of range in " + dir);
    }
    ds.train_idx = read_index(dir + "/train.idx");
    ds.val_idx = read_index(dir + "/val.idx");
    if (ds.train_idx.size() != std::stoull(need("n_train")) ||
        ds.val_idx.size() != std::stoull(need("n_val"))) {
        throw IoError("split sizes disagree with the manifest in " + dir);
    }
    return ds;
}

}  // namespace sgt
