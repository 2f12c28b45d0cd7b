#ifndef F2F_ERRORS_HPP
#define F2F_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace f2f {

/// Coarse classification used by the command-line tool to pick an exit code.
enum class ErrorCategory {
    usage,        ///< caller supplied an invalid configuration
    data,         ///< malformed file, bad values, shape mismatch
    precondition  ///< not enough subjects/images/batch members for the request
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define F2F_DEFINE_ERROR(Name, Category)                                    \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what) : Error(Category, what) {}   \
    }

F2F_DEFINE_ERROR(DimensionError, ErrorCategory::data);
F2F_DEFINE_ERROR(DegenerateVectorError, ErrorCategory::data);
F2F_DEFINE_ERROR(DataValidationError, ErrorCategory::data);
F2F_DEFINE_ERROR(DuplicateRecordError, ErrorCategory::data);
F2F_DEFINE_ERROR(MissingEmbeddingError, ErrorCategory::data);
F2F_DEFINE_ERROR(FormatError, ErrorCategory::data);
F2F_DEFINE_ERROR(CorruptFileError, ErrorCategory::data);
F2F_DEFINE_ERROR(CsvShapeError, ErrorCategory::data);
F2F_DEFINE_ERROR(InvalidSpecError, ErrorCategory::usage);
F2F_DEFINE_ERROR(BatchTooSmallError, ErrorCategory::precondition);
F2F_DEFINE_ERROR(InsufficientDataError, ErrorCategory::precondition);

#undef F2F_DEFINE_ERROR

}  // namespace f2f

#endif  // F2F_ERRORS_HPP
