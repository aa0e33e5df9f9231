#include "drtr/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <vector>

#include "drtr/errors.hpp"

namespace drtr {

namespace {

constexpr char kMagic[8] = {'D', 'R', 'T', 'R', 'P', 'A', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_tensor(std::ostream& out, const std::string& name, std::span<const double> values) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(values.size()));
    for (double v : values) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
}

std::vector<double> get_tensor(std::istream& in, const std::string& expected_name) {
    const std::uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in || name != expected_name) {
        throw MalformedInputError("checkpoint: expected tensor '" + expected_name +
                                  "', found '" + name + "'");
    }
    const std::uint32_t count = get_u32(in);
    std::vector<double> values(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t bits = get_u32(in);
        float f;
        std::memcpy(&f, &bits, 4);
        values[i] = static_cast<double>(f);
    }
    if (!in) throw MalformedInputError("checkpoint: truncated tensor '" + expected_name + "'");
    return values;
}

} // namespace

void save_checkpoint(const std::string& path, const DiffusionParams& params,
                     const std::array<double, 3>& omega) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MalformedInputError("checkpoint: cannot write '" + path + "'");
    out.write(kMagic, 8);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(params.hops()));
    put_u32(out, static_cast<std::uint32_t>(params.feature_dim()));
    put_u32(out, static_cast<std::uint32_t>(params.hidden_dim()));
    put_u32(out, static_cast<std::uint32_t>(params.class_count()));
    for (int k = 0; k < params.hops(); ++k) {
        put_tensor(out, "W" + std::to_string(k + 1), params.hop_transforms[k].data());
    }
    put_tensor(out, "attn", params.attention_vector);
    put_tensor(out, "phi", params.hop_logits);
    put_tensor(out, "cls_w", params.classifier.data());
    put_tensor(out, "cls_b", params.classifier_bias);
    put_tensor(out, "omega", omega);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedInputError("checkpoint: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw MalformedInputError("checkpoint: bad magic in '" + path + "'");
    }
    const std::uint32_t version = get_u32(in);
    if (version != kVersion) {
        throw MalformedInputError("checkpoint: unsupported version " + std::to_string(version));
    }
    const std::uint32_t hops = get_u32(in);
    const std::uint32_t feat = get_u32(in);
    const std::uint32_t hid = get_u32(in);
    const std::uint32_t classes = get_u32(in);
    if (!in || hops == 0 || feat == 0 || hid == 0) {
        throw MalformedInputError("checkpoint: bad header in '" + path + "'");
    }

    Checkpoint ck;
    ck.params.hop_transforms.reserve(hops);
    for (std::uint32_t k = 0; k < hops; ++k) {
        const auto flat = get_tensor(in, "W" + std::to_string(k + 1));
        if (flat.size() != static_cast<std::size_t>(feat) * hid) {
            throw MalformedInputError("checkpoint: tensor size mismatch for W" +
                                      std::to_string(k + 1));
        }
        Matrix w(feat, hid);
        w.data() = flat;
        ck.params.hop_transforms.push_back(std::move(w));
    }
    ck.params.attention_vector = get_tensor(in, "attn");
    if (ck.params.attention_vector.size() != 2 * static_cast<std::size_t>(hid)) {
        throw MalformedInputError("checkpoint: attention vector size mismatch");
    }
    ck.params.hop_logits = get_tensor(in, "phi");
    if (ck.params.hop_logits.size() != hops) {
        throw MalformedInputError("checkpoint: hop logit count mismatch");
    }
    const auto cls_flat = get_tensor(in, "cls_w");
    if (cls_flat.size() != static_cast<std::size_t>(hid) * classes) {
        throw MalformedInputError("checkpoint: classifier size mismatch");
    }
    ck.params.classifier = Matrix(hid, classes);
    ck.params.classifier.data() = cls_flat;
    ck.params.classifier_bias = get_tensor(in, "cls_b");
    if (ck.params.classifier_bias.size() != classes) {
        throw MalformedInputError("checkpoint: classifier bias size mismatch");
    }
    const auto omega = get_tensor(in, "omega");
    if (omega.size() != 3) throw MalformedInputError("checkpoint: omega size mismatch");
    for (int i = 0; i < 3; ++i) ck.omega[i] = omega[i];
    return ck;
}

} // namespace drtr
