#include "f2f/store.hpp"

#include <charconv>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "binary_io.hpp"

namespace f2f {

namespace {

constexpr char store_magic[4] = {'F', '2', 'F', 'E'};

class StringTable {
public:
    std::uint32_t intern(const std::string& s) {
        auto [it, inserted] = index_.emplace(s, static_cast<std::uint32_t>(strings_.size()));
        if (inserted) {
            strings_.push_back(s);
        }
        return it->second;
    }

    const std::vector<std::string>& strings() const noexcept { return strings_; }

private:
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::string> strings_;
};

std::vector<std::string> read_table(detail::ByteReader& r) {
    const auto count = r.u32();
    // every entry needs at least its 4-byte length
    r.need(std::size_t{count} * 4);
    std::vector<std::string> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        out.push_back(r.str());
    }
    return out;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace

std::string encode_store(const EmbeddingSet& set) {
    StringTable subjects;
    StringTable images;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> keys;
    keys.reserve(set.size());
    for (const auto& rec : set.records()) {
        keys.emplace_back(subjects.intern(rec.subject.str()), images.intern(rec.image));
    }

    detail::ByteWriter w;
    w.raw({store_magic, 4});
    w.u16(store_version);
    w.u32(static_cast<std::uint32_t>(set.dim()));
    w.u64(set.size());
    w.u32(static_cast<std::uint32_t>(subjects.strings().size()));
    for (const auto& s : subjects.strings()) {
        w.str(s);
    }
    w.u32(static_cast<std::uint32_t>(images.strings().size()));
    for (const auto& s : images.strings()) {
        w.str(s);
    }
    for (std::size_t i = 0; i < set.size(); ++i) {
        w.u32(keys[i].first);
        w.u32(keys[i].second);
        for (float v : set[i].vector) {
            w.f32(v);
        }
    }
    return w.bytes();
}

EmbeddingSet decode_store(std::string_view bytes, const std::string& context) {
    detail::ByteReader r(bytes, context);
    if (bytes.size() < 4 || r.raw(4) != std::string_view(store_magic, 4)) {
        throw FormatError(context + ": not an F2FE embedding store");
    }
    const auto version = r.u16();
    if (version != store_version) {
        throw FormatError(context + ": unsupported store version " + std::to_string(version));
    }
    const auto dim = r.u32();
    if (dim == 0) {
        throw FormatError(context + ": dimension is zero");
    }
    const auto count = r.u64();
    const auto subjects = read_table(r);
    const auto images = read_table(r);

    const std::size_t record_bytes = 8 + std::size_t{dim} * 4;
    if (count > r.remaining() / record_bytes) {
        throw CorruptFileError(context + ": body holds fewer than the declared " + std::to_string(count) +
                               " records");
    }

    EmbeddingSet set(dim);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto s = r.u32();
        const auto m = r.u32();
        if (s >= subjects.size() || m >= images.size()) {
            throw CorruptFileError(context + ": record " + std::to_string(i) + " has an id index out of range");
        }
        std::vector<float> v(dim);
        for (auto& x : v) {
            x = r.f32();
        }
        try {
            set.add(SubjectId(subjects[s]), images[m], std::move(v));
        } catch (const DataValidationError& e) {
            throw DataValidationError(context + ": record " + std::to_string(i) + ": " + e.what());
        }
    }
    if (r.remaining() != 0) {
        throw CorruptFileError(context + ": " + std::to_string(r.remaining()) + " trailing bytes");
    }
    return set;
}

void write_store(const EmbeddingSet& set, const std::filesystem::path& path) {
    detail::write_file_atomic(path, encode_store(set));
}

EmbeddingSet read_store(const std::filesystem::path& path) {
    return decode_store(detail::read_file(path), path.string());
}

EmbeddingSet parse_csv(std::string_view text, std::size_t dim, const std::string& context) {
    EmbeddingSet set(dim);
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }

        const auto fields = split_fields(line);
        const auto where = context + ":" + std::to_string(line_no);
        if (fields.size() != dim + 2) {
            throw CsvShapeError(where + ": expected " + std::to_string(dim + 2) + " fields, found " +
                                std::to_string(fields.size()));
        }
        if (!header_seen) {
            if (fields[0] != "subject_id" || fields[1] != "image_id") {
                throw CsvShapeError(where + ": header must start with subject_id,image_id");
            }
            header_seen = true;
            continue;
        }

        std::vector<float> v(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            const auto f = fields[d + 2];
            const char* first = f.data();
            const char* last = f.data() + f.size();
            if (!f.empty() && *first == '+') {
                ++first;
            }
            auto [ptr, ec] = std::from_chars(first, last, v[d]);
            if (ec != std::errc() || ptr != last) {
                throw CsvShapeError(where + ": cannot parse value '" + std::string(f) + "'");
            }
        }
        try {
            set.add(SubjectId(std::string(fields[0])), std::string(fields[1]), std::move(v));
        } catch (const DuplicateRecordError& e) {
            throw DuplicateRecordError(where + ": " + e.what());
        } catch (const DataValidationError& e) {
            throw DataValidationError(where + ": " + e.what());
        }
    }
    if (!header_seen) {
        throw CsvShapeError(context + ": missing header row");
    }
    return set;
}

EmbeddingSet import_csv(const std::filesystem::path& path, std::size_t dim) {
    return parse_csv(detail::read_file(path), dim, path.string());
}

std::string format_csv(const EmbeddingSet& set) {
    std::string out = "subject_id,image_id";
    for (std::size_t d = 0; d < set.dim(); ++d) {
        out += ",v" + std::to_string(d);
    }
    out.push_back('\n');
    char buf[32];
    for (const auto& rec : set.records()) {
        if (rec.subject.str().find_first_of(",\"") != std::string::npos ||
            rec.image.find_first_of(",\"") != std::string::npos) {
            throw DataValidationError("id " + rec.subject.str() + "/" + rec.image +
                                      " cannot be written to CSV unquoted");
        }
        out += rec.subject.str();
        out.push_back(',');
        out += rec.image;
        for (float v : rec.vector) {
            out.push_back(',');
            auto res = std::to_chars(buf, buf + sizeof buf, v);
            out.append(buf, res.ptr);
        }
        out.push_back('\n');
    }
    return out;
}

void export_csv(const EmbeddingSet& set, const std::filesystem::path& path) {
    detail::write_file_atomic(path, format_csv(set));
}

}  // namespace f2f
