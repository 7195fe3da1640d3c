#include "cavshift/operator_cache.hpp"

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <zlib.h>

#include "cavshift/errors.hpp"

namespace cavshift {

namespace {

constexpr char magic[8] = {'C', 'A', 'V', 'S', 'O', 'P', 'K', '1'};
constexpr std::uint32_t format_version = 1;

template <class T>
void put(std::string& buf, const T& v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Cursor {
public:
    explicit Cursor(const std::string& s) : s_(s) {}
    template <class T>
    bool get(T& v) {
        if (pos_ + sizeof(T) > s_.size()) return false;
        std::memcpy(&v, s_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return true;
    }
    bool bytes(void* dst, std::size_t n) {
        if (pos_ + n > s_.size()) return false;
        std::memcpy(dst, s_.data() + pos_, n);
        pos_ += n;
        return true;
    }
    std::size_t pos() const { return pos_; }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

std::uint32_t crc(const char* p, std::size_t n) {
    uLong c = crc32(0L, Z_NULL, 0);
    while (n > 0) {
        const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        c = crc32(c, reinterpret_cast<const Bytef*>(p), chunk);
        p += chunk;
        n -= chunk;
    }
    return static_cast<std::uint32_t>(c);
}

void put_matrix(std::string& buf, const MatXc& m) {
    put(buf, static_cast<std::int64_t>(m.rows()));
    put(buf, static_cast<std::int64_t>(m.cols()));
    buf.append(reinterpret_cast<const char*>(m.data()), sizeof(cplx) * m.size());
}

bool get_matrix(Cursor& c, MatXc& m) {
    std::int64_t r = 0, k = 0;
    if (!c.get(r) || !c.get(k) || r < 0 || k < 0 || r > (1 << 20) || k > (1 << 20)) return false;
    m.resize(r, k);
    return c.bytes(m.data(), sizeof(cplx) * m.size());
}

}  // namespace

FileOperatorCache::FileOperatorCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw InvalidArgument("operator cache: cannot create '" + dir_.string() + "': " + ec.message());
}

std::filesystem::path FileOperatorCache::file_for(const std::string& key) const {
    std::string name;
    for (char ch : key) name += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
    return dir_ / (name + ".kop");
}

bool FileOperatorCache::load(const std::string& key, DiscreteOperator& op) {
    const auto t0 = clock::now();
    const auto path = file_for(key);
    bool ok = false, corrupt = false;
    std::ifstream f(path, std::ios::binary);
    if (f) {
        std::stringstream ss;
        ss << f.rdbuf();
        const std::string buf = ss.str();
        corrupt = true;
        if (buf.size() > sizeof(magic) + 4 && std::memcmp(buf.data(), magic, sizeof(magic)) == 0) {
            std::uint32_t stored = 0;
            std::memcpy(&stored, buf.data() + buf.size() - 4, 4);
            if (stored == crc(buf.data(), buf.size() - 4)) {
                Cursor c(buf);
                char m[8];
                std::uint32_t ver = 0, klen = 0;
                std::int32_t sector = 0;
                double re = 0, im = 0;
                DiscreteOperator tmp;
                std::string k;
                if (c.bytes(m, 8) && c.get(ver) && ver == format_version && c.get(klen) && klen < 4096) {
                    k.resize(klen);
                    if (c.bytes(k.data(), klen) && k == key && c.get(re) && c.get(im) && c.get(sector) &&
                        sector >= 0 && sector <= 2 && get_matrix(c, tmp.a) && get_matrix(c, tmp.da) &&
                        c.pos() + 4 == buf.size()) {
                        tmp.omega = {re, im};
                        tmp.sector = static_cast<Sector>(sector);
                        op = std::move(tmp);
                        ok = true;
                        corrupt = false;
                    }
                }
            }
        }
    }
    std::lock_guard<std::mutex> lk(mu_);
    stats_.load_seconds += std::chrono::duration<double>(clock::now() - t0).count();
    if (ok) {
        ++stats_.hits;
    } else {
        ++stats_.misses;
        if (corrupt) ++stats_.corrupt;
        pending_[key] = clock::now();
    }
    return ok;
}

void FileOperatorCache::store(const std::string& key, const DiscreteOperator& op) {
    {
        std::lock_guard<std::mutex> lk(mu_);
        const auto it = pending_.find(key);
        if (it != pending_.end()) {
            stats_.assembly_seconds += std::chrono::duration<double>(clock::now() - it->second).count();
            pending_.erase(it);
        }
    }
    std::string buf;
    buf.append(magic, sizeof(magic));
    put(buf, format_version);
    put(buf, static_cast<std::uint32_t>(key.size()));
    buf += key;
    put(buf, op.omega.real());
    put(buf, op.omega.imag());
    put(buf, static_cast<std::int32_t>(op.sector));
    put_matrix(buf, op.a);
    put_matrix(buf, op.da);
    put(buf, crc(buf.data(), buf.size()));

    const auto path = file_for(key);
    std::ostringstream tag;
    tag << ".tmp." << std::this_thread::get_id();
    auto tmp = path;
    tmp += tag.str();
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) return;  // caching is best effort
        f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!f) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            return;
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        return;
    }
    std::lock_guard<std::mutex> lk(mu_);
    ++stats_.writes;
}

FileOperatorCache::Stats FileOperatorCache::stats() const {
    std::lock_guard<std::mutex> lk(mu_);
    return stats_;
}

std::string resolve_cache_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("CAVSHIFT_CACHE_DIR"); env && *env) return env;
    return {};
}

}  // namespace cavshift
