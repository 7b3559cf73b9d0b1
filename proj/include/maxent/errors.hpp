#pragma once

#include <stdexcept>
#include <string>

namespace maxent {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- domain / encoding ---

struct UnknownCategory : Error {
    UnknownCategory(const std::string& block, const std::string& value)
        : Error("unknown category '" + value + "' for attribute '" + block + "'"),
          block_name(block), value(value) {}
    std::string block_name;
    std::string value;
};

struct ArityMismatch : Error {
    ArityMismatch(std::size_t expected, std::size_t got)
        : Error("record has " + std::to_string(got) + " values, schema expects " +
                std::to_string(expected)) {}
};

struct InvalidOneHot : Error {
    explicit InvalidOneHot(const std::string& block)
        : Error("one-hot block '" + block + "' does not have exactly one set coordinate"),
          block_name(block) {}
    std::string block_name;
};

struct InvalidPoint : Error {
    explicit InvalidPoint(const std::string& msg) : Error(msg) {}
};

struct EmptyDataset : Error {
    EmptyDataset() : Error("dataset is empty") {}
};

struct BoundaryMarginal : Error {
    BoundaryMarginal(int coordinate, double value)
        : Error("marginal coordinate " + std::to_string(coordinate) + " = " +
                std::to_string(value) + " is not in the required interior"),
          coordinate(coordinate), value(value) {}
    int coordinate;
    double value;
};

struct SchemaError : Error {
    explicit SchemaError(const std::string& msg) : Error(msg) {}
};

// --- prior ---

struct EmptyCell : Error {
    EmptyCell(int y, int z)
        : Error("label/group cell (y=" + std::to_string(y) + ", z=" + std::to_string(z) +
                ") is empty while its counterpart is not; the requested balance is unachievable"),
          y(y), z(z) {}
    int y;
    int z;
};

struct InvalidTau : Error {
    explicit InvalidTau(double tau)
        : Error("tau = " + std::to_string(tau) + " outside (0, 1]") {}
};

// --- oracles ---

struct DimensionMismatch : Error {
    DimensionMismatch(std::size_t expected, std::size_t got)
        : Error("vector of length " + std::to_string(got) + ", expected " +
                std::to_string(expected)) {}
};

struct NonFiniteInput : Error {
    NonFiniteInput() : Error("input vector contains a non-finite value") {}
};

struct DomainTooLarge : Error {
    explicit DomainTooLarge(const std::string& msg) : Error(msg) {}
};

// --- solver ---

struct InvalidEta : Error {
    explicit InvalidEta(double eta)
        : Error("eta = " + std::to_string(eta) + " outside (0, 0.5]") {}
};

struct UnboundedRadius : Error {
    UnboundedRadius() : Error("C = 0 gives an unbounded dual solution") {}
};

struct NotConverged : Error {
    explicit NotConverged(const std::string& diagnostics)
        : Error("solver did not converge: " + diagnostics) {}
};

struct QPNotConverged : Error {
    QPNotConverged() : Error("inner quadratic program did not reach requested tolerance") {}
};

struct NumericalBreakdown : Error {
    explicit NumericalBreakdown(const std::string& msg)
        : Error("numerical breakdown: " + msg) {}
};

// --- sampler ---

struct InconsistentAssignment : Error {
    explicit InconsistentAssignment(const std::string& msg) : Error(msg) {}
};

struct BlockAlreadyAssigned : Error {
    explicit BlockAlreadyAssigned(int block)
        : Error("block " + std::to_string(block) + " is already assigned") {}
};

// --- metrics ---

struct ZeroGroupMass : Error {
    explicit ZeroGroupMass(int group)
        : Error("protected group " + std::to_string(group) + " has zero mass") {}
};

struct ZeroJointMass : Error {
    ZeroJointMass(int y, int z)
        : Error("joint mass P(Y=" + std::to_string(y) + ", Z=" + std::to_string(z) +
                ") is zero") {}
};

struct SchemaMismatch : Error {
    explicit SchemaMismatch(const std::string& msg) : Error(msg) {}
};

}  // namespace maxent
