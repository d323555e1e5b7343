#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adeqvaet {

/// Base of every error raised by the library. `kind()` is a stable
/// identifier used in structured CLI error output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define ADEQVAET_DEFINE_ERROR(Name)                                            \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& message) : Error(#Name, message) {}   \
    }

// data_ingest
class MissingColumn : public Error {
public:
    explicit MissingColumn(const std::string& column)
        : Error("MissingColumn", "missing column '" + column + "'"), column_(column) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class UnparseableCell : public Error {
public:
    UnparseableCell(std::size_t row, std::size_t col, const std::string& text)
        : Error("UnparseableCell", "cannot parse cell at row " + std::to_string(row) +
                                       ", column " + std::to_string(col) + ": '" + text + "'"),
          row_(row), col_(col) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

class UnknownLabelToken : public Error {
public:
    UnknownLabelToken(std::size_t row, const std::string& token)
        : Error("UnknownLabelToken",
                "unknown label token '" + token + "' at row " + std::to_string(row)),
          row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

ADEQVAET_DEFINE_ERROR(InvalidSchema);
ADEQVAET_DEFINE_ERROR(SingleClassDataset);
ADEQVAET_DEFINE_ERROR(IoError);

// anra
class AllMissingColumn : public Error {
public:
    explicit AllMissingColumn(std::size_t col)
        : Error("AllMissingColumn", "column " + std::to_string(col) + " has no observed values"),
          col_(col) {}
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t col_;
};

ADEQVAET_DEFINE_ERROR(TooFewRows);
ADEQVAET_DEFINE_ERROR(DimensionMismatch);
ADEQVAET_DEFINE_ERROR(MinorityTooSmall);
ADEQVAET_DEFINE_ERROR(InvalidConfig);

// diffcore
ADEQVAET_DEFINE_ERROR(ShapeMismatch);
ADEQVAET_DEFINE_ERROR(NonScalarLoss);
ADEQVAET_DEFINE_ERROR(FormatError);

// qvae / transformer
ADEQVAET_DEFINE_ERROR(QubitOutOfRange);
ADEQVAET_DEFINE_ERROR(LengthMismatch);

// ade
ADEQVAET_DEFINE_ERROR(PopulationTooSmall);

class CandidateEvaluationFailed : public Error {
public:
    CandidateEvaluationFailed(std::size_t id, const std::string& why)
        : Error("CandidateEvaluationFailed",
                "candidate " + std::to_string(id) + " failed: " + why),
          id_(id) {}
    std::size_t id() const noexcept { return id_; }

private:
    std::size_t id_;
};

// eval
ADEQVAET_DEFINE_ERROR(EmptyMatrix);
ADEQVAET_DEFINE_ERROR(EmptyReport);
ADEQVAET_DEFINE_ERROR(UnknownFormat);

// cli
ADEQVAET_DEFINE_ERROR(ConfigError);

#undef ADEQVAET_DEFINE_ERROR

}  // namespace adeqvaet
