#ifndef TPIDM_COMMON_HPP
#define TPIDM_COMMON_HPP

#include <stdexcept>
#include <string>

namespace tpidm {

// Precondition / shape / configuration violations. CLI maps these to exit 1.
class contract_error : public std::invalid_argument {
public:
    explicit contract_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Non-finite values and divergence. CLI maps these to exit 2.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem, parse, and corrupt-artifact failures. CLI maps these to exit 3.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw contract_error(msg);
}

}  // namespace tpidm

#endif
