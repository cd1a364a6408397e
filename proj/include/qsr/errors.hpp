#pragma once

#include <stdexcept>
#include <string>

namespace qsr {

// Exit codes used by the CLI: 0 ok, 2 precondition, 3 dimension cap, 4 solver failure.
enum class ErrorClass { precondition = 2, dimension_cap = 3, solver = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& msg) : std::runtime_error(msg), cls_(cls) {}
    ErrorClass error_class() const { return cls_; }

private:
    ErrorClass cls_;
};

struct DimensionCap : Error {
    explicit DimensionCap(const std::string& msg) : Error(ErrorClass::dimension_cap, msg) {}
};
struct LabelError : Error {
    explicit LabelError(const std::string& msg) : Error(ErrorClass::precondition, msg) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& msg) : Error(ErrorClass::precondition, msg) {}
};
struct HermitianError : Error {
    explicit HermitianError(const std::string& msg) : Error(ErrorClass::precondition, msg) {}
};
struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(ErrorClass::precondition, msg) {}
};
struct SupportError : Error {
    explicit SupportError(const std::string& msg) : Error(ErrorClass::precondition, msg) {}
};
struct PreconditionError : Error {
    explicit PreconditionError(const std::string& msg) : Error(ErrorClass::precondition, msg) {}
};
struct RationalizeError : Error {
    explicit RationalizeError(const std::string& msg) : Error(ErrorClass::precondition, msg) {}
};
struct SolverStatus : Error {
    explicit SolverStatus(const std::string& msg) : Error(ErrorClass::solver, msg) {}
};
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(ErrorClass::precondition, msg) {}
};

}  // namespace qsr
