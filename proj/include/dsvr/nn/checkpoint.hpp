#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsvr/nn/optim.hpp"
#include "dsvr/nn/params.hpp"

namespace dsvr::nn {

/// Checkpoint archive: 8-byte magic, u32 little-endian header length, JSON
/// header (format tag "ckpt_v1", parameter names/shapes, optimizer metadata,
/// embedded run config), then raw little-endian f32 buffers: one per
/// parameter, followed by Adam first/second moments when present.
inline constexpr char kCkptMagic[8] = {'D', 'S', 'V', 'R', 'C', 'K', 'P', 'T'};
inline constexpr const char* kCkptFormat = "ckpt_v1";

namespace detail {
static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

inline void write_f32(std::ofstream& out, const float* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(float)));
}

inline void read_f32(std::ifstream& in, float* data, std::size_t count) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) throw std::runtime_error("checkpoint: truncated data section");
}
}  // namespace detail

struct CheckpointContents {
    ParamSet<float> params;
    bool has_optimizer = false;
    std::int64_t step = 0;
    float lr = 0.f, beta1 = 0.f, beta2 = 0.f, eps = 0.f;
    std::vector<std::pair<Tensor4<float>, Tensor4<float>>> moments;  // aligned with params.names()
    nlohmann::json config;
};

inline void save_checkpoint(const std::string& path, const ParamSet<float>& params,
                            const Adam<float>* opt, const nlohmann::json& config) {
    nlohmann::json header;
    header["format"] = kCkptFormat;
    header["config"] = config;
    auto& plist = header["params"] = nlohmann::json::array();
    for (const auto& name : params.names()) {
        const auto& v = params.at(name)->value;
        plist.push_back({{"name", name},
                         {"shape", {v.n(), v.c(), v.h(), v.w()}},
                         {"trainable", params.trainable(name)}});
    }
    header["optimizer"]["present"] = (opt != nullptr);
    if (opt) {
        header["optimizer"]["step"] = opt->step_count();
        header["optimizer"]["lr"] = opt->config().lr;
        header["optimizer"]["beta1"] = opt->config().beta1;
        header["optimizer"]["beta2"] = opt->config().beta2;
        header["optimizer"]["eps"] = opt->config().eps;
    }

    const std::string hs = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    out.write(kCkptMagic, 8);
    const std::uint32_t hlen = static_cast<std::uint32_t>(hs.size());
    out.write(reinterpret_cast<const char*>(&hlen), 4);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& name : params.names()) {
        const auto& v = params.at(name)->value;
        detail::write_f32(out, v.data(), v.numel());
    }
    if (opt) {
        for (const auto& name : params.names()) {
            const auto& v = params.at(name)->value;
            if (opt->has_moments(name)) {
                detail::write_f32(out, opt->first_moment(name).data(), v.numel());
                detail::write_f32(out, opt->second_moment(name).data(), v.numel());
            } else {
                const std::vector<float> zeros(v.numel(), 0.f);
                detail::write_f32(out, zeros.data(), zeros.size());
                detail::write_f32(out, zeros.data(), zeros.size());
            }
        }
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

inline CheckpointContents load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCkptMagic, 8) != 0) {
        throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint archive");
    }
    std::uint32_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), 4);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    if (!in) throw std::runtime_error("checkpoint: truncated header");
    const nlohmann::json header = nlohmann::json::parse(hs);
    if (header.value("format", "") != kCkptFormat) {
        throw std::runtime_error("checkpoint: incompatible version '" +
                                 header.value("format", "<missing>") + "', expected " +
                                 kCkptFormat);
    }

    CheckpointContents ck;
    ck.config = header.value("config", nlohmann::json::object());
    for (const auto& p : header.at("params")) {
        const auto shape = p.at("shape");
        Tensor4<float> v(shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>(),
                         shape.at(3).get<int>());
        detail::read_f32(in, v.data(), v.numel());
        ck.params.add(p.at("name").get<std::string>(), std::move(v),
                      p.value("trainable", true));
    }
    ck.has_optimizer = header.at("optimizer").value("present", false);
    if (ck.has_optimizer) {
        ck.step = header["optimizer"].value("step", std::int64_t(0));
        ck.lr = header["optimizer"].value("lr", 0.f);
        ck.beta1 = header["optimizer"].value("beta1", 0.f);
        ck.beta2 = header["optimizer"].value("beta2", 0.f);
        ck.eps = header["optimizer"].value("eps", 0.f);
        for (const auto& name : ck.params.names()) {
            const auto& v = ck.params.at(name)->value;
            Tensor4<float> m(v.n(), v.c(), v.h(), v.w());
            Tensor4<float> s(v.n(), v.c(), v.h(), v.w());
            detail::read_f32(in, m.data(), m.numel());
            detail::read_f32(in, s.data(), s.numel());
            ck.moments.emplace_back(std::move(m), std::move(s));
        }
    }
    return ck;
}

/// Rebuilds an Adam instance from loaded checkpoint contents.
inline Adam<float> restore_optimizer(const CheckpointContents& ck) {
    Adam<float>::Config cfg;
    cfg.lr = ck.lr;
    cfg.beta1 = ck.beta1;
    cfg.beta2 = ck.beta2;
    cfg.eps = ck.eps;
    Adam<float> opt(cfg);
    opt.set_step_count(ck.step);
    for (std::size_t i = 0; i < ck.moments.size(); ++i) {
        opt.restore(ck.params.names()[i], ck.moments[i].first, ck.moments[i].second);
    }
    return opt;
}

/// Copies values (and trainable flags) from `src` into matching names of `dst`.
/// Missing or shape-mismatched names are an error.
template <typename T>
void load_into(ParamSet<T>& dst, const ParamSet<float>& src, const std::string& prefix = "") {
    for (const auto& name : src.names()) {
        if (!prefix.empty() && name.rfind(prefix, 0) != 0) continue;
        if (!dst.contains(name)) {
            throw std::runtime_error("checkpoint: parameter '" + name +
                                     "' not present in destination set");
        }
        auto& dvar = *dst.at(name);
        const auto& sval = src.at(name)->value;
        if (dvar.value.shape() != sval.shape()) {
            throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': " +
                                     dvar.value.shape_str() + " vs " + sval.shape_str());
        }
        dvar.value = sval.template cast<T>();
    }
}

}  // namespace dsvr::nn
