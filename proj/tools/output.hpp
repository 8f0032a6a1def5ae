#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace twophoton::cli {

// Files appear under their final name only once complete (temporary file, then rename).
class OutputDir {
public:
    explicit OutputDir(std::filesystem::path dir);

    void write(const std::string& name, const std::function<void(std::ostream&)>& body);

    // Streaming variant for large outputs.
    std::ofstream& open(const std::string& name);
    void commit(const std::string& name);

    // Removes everything this run wrote, including unfinished temporaries.
    void discard();

    const std::filesystem::path& path() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    std::filesystem::path tmp(const std::string& name) const { return dir_ / (name + ".tmp"); }

    std::filesystem::path dir_;
    std::vector<std::string> files_;
    std::vector<std::string> pending_;
    std::ofstream stream_;
};

}  // namespace twophoton::cli
