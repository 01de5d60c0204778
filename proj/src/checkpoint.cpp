#include "tpidm/checkpoint.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tpidm/common.hpp"

namespace tpidm {

namespace {

constexpr char kMagic[6] = {'T', 'P', 'I', 'D', 'M', '\0'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& buf, std::size_t& pos) {
    if (pos + sizeof(T) > buf.size()) throw io_error("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += sizeof(T);
    return static_cast<T>(v);
}

std::uint64_t parse_meta_u64(const std::string& meta, const std::string& key) {
    std::istringstream in(meta);
    std::string line;
    while (std::getline(in, line)) {
        const std::string prefix = key + " = ";
        if (line.rfind(prefix, 0) == 0) {
            std::uint64_t out = 0;
            const char* b = line.data() + prefix.size();
            const char* e = line.data() + line.size();
            auto [p, ec] = std::from_chars(b, e, out);
            if (ec != std::errc() || p != e)
                throw io_error("checkpoint: malformed metadata value for '" + key + "'");
            return out;
        }
    }
    throw io_error("checkpoint: metadata is missing '" + key + "'");
}

}  // namespace

std::uint64_t fnv1a64(const unsigned char* data, std::size_t len) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::string meta = ckpt.config.serialize();
    meta += "---\n";
    meta += "training_steps = " + std::to_string(ckpt.training_steps) + "\n";
    meta += "seed = " + std::to_string(ckpt.seed) + "\n";

    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_le<std::uint16_t>(out, kVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
    out += meta;
    put_le<std::uint64_t>(out, ckpt.params.size());
    for (float p : ckpt.params) {
        std::uint32_t bits;
        std::memcpy(&bits, &p, sizeof(bits));
        put_le<std::uint32_t>(out, bits);
    }
    put_le<std::uint64_t>(
        out, fnv1a64(reinterpret_cast<const unsigned char*>(out.data()), out.size()));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("checkpoint: cannot open '" + path + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw io_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("checkpoint: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string buf = ss.str();

    if (buf.size() < sizeof(kMagic) + 2 + 4 + 8 + 8 ||
        std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw io_error("checkpoint: '" + path + "' is not a valid checkpoint (bad magic)");
    std::size_t pos = sizeof(kMagic);
    const auto version = get_le<std::uint16_t>(buf, pos);
    if (version != kVersion)
        throw io_error("checkpoint: unsupported version " + std::to_string(version));

    const std::size_t body_end = buf.size() - 8;
    std::size_t cpos = body_end;
    const auto stored = get_le<std::uint64_t>(buf, cpos);
    const auto actual =
        fnv1a64(reinterpret_cast<const unsigned char*>(buf.data()), body_end);
    if (stored != actual)
        throw io_error("checkpoint: '" + path + "' is corrupt (checksum mismatch)");

    const auto meta_len = get_le<std::uint32_t>(buf, pos);
    if (pos + meta_len > body_end) throw io_error("checkpoint: truncated metadata");
    const std::string meta = buf.substr(pos, meta_len);
    pos += meta_len;

    const std::size_t sep = meta.find("---\n");
    if (sep == std::string::npos) throw io_error("checkpoint: malformed metadata");

    Checkpoint ckpt;
    ckpt.config = parse_config(meta.substr(0, sep));
    const std::string extra = meta.substr(sep + 4);
    ckpt.training_steps = parse_meta_u64(extra, "training_steps");
    ckpt.seed = parse_meta_u64(extra, "seed");

    const auto count = get_le<std::uint64_t>(buf, pos);
    if (pos + count * 4 != body_end)
        throw io_error("checkpoint: parameter blob size does not match header count");
    ckpt.params.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto bits = get_le<std::uint32_t>(buf, pos);
        float p;
        std::memcpy(&p, &bits, sizeof(p));
        ckpt.params[i] = p;
    }
    return ckpt;
}

}  // namespace tpidm
