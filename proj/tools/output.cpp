#include "output.hpp"

#include <algorithm>
#include <stdexcept>

namespace twophoton::cli {

namespace fs = std::filesystem;

OutputDir::OutputDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

void OutputDir::write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    body(open(name));
    commit(name);
}

std::ofstream& OutputDir::open(const std::string& name) {
    if (stream_.is_open()) throw std::logic_error("output: another file is still open");
    stream_.open(tmp(name), std::ios::binary | std::ios::trunc);
    if (!stream_) throw std::runtime_error("cannot write " + tmp(name).string());
    pending_.push_back(name);
    return stream_;
}

void OutputDir::commit(const std::string& name) {
    stream_.close();
    if (stream_.fail()) throw std::runtime_error("failed writing " + tmp(name).string());
    fs::rename(tmp(name), dir_ / name);
    pending_.erase(std::remove(pending_.begin(), pending_.end(), name), pending_.end());
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
}

void OutputDir::discard() {
    if (stream_.is_open()) stream_.close();
    std::error_code ec;
    for (const auto& n : pending_) fs::remove(tmp(n), ec);
    for (const auto& n : files_) fs::remove(dir_ / n, ec);
    pending_.clear();
    files_.clear();
}

}  // namespace twophoton::cli
