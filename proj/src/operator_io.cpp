#include <algorithm>
#include <istream>
#include <iterator>
#include <ostream>

#include "binary_io.hpp"
#include "tribaker/checksum.hpp"
#include "tribaker/quantum_map.hpp"

namespace tribaker {

namespace {
constexpr std::string_view kMagic = "TBAKEROP";
constexpr std::size_t kHeaderSize = 56;
} // namespace

void write_operator(std::ostream& out, const ComplexOperator& op) {
    const auto& m = op.matrix();
    std::string payload;
    payload.reserve(static_cast<std::size_t>(m.size()) * 16);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) detail::put_complex(payload, m(r, c));

    std::string header(kMagic);
    detail::put_u32(header, kOperatorFormatVersion);
    detail::put_u32(header, static_cast<std::uint32_t>(op.dim()));
    header.push_back(static_cast<char>(op.tag()));
    header.push_back(static_cast<char>(op.basis()));
    header.append(6, '\0');
    const auto digest = sha256(payload);
    header.append(reinterpret_cast<const char*>(digest.data()), digest.size());

    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw FormatError("write_operator: stream write failed");
}

ComplexOperator read_operator(std::istream& in) {
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    detail::Reader rd(bytes);
    if (rd.take(kMagic.size()) != kMagic) throw FormatError("read_operator: bad magic");
    if (rd.u32() != kOperatorFormatVersion) throw FormatError("read_operator: unsupported format version");
    const std::uint32_t dim = rd.u32();
    const std::uint8_t tag = rd.u8();
    const std::uint8_t basis = rd.u8();
    rd.take(6);
    const auto stored = rd.take(32);
    if (dim == 0 || tag > static_cast<std::uint8_t>(OperatorTag::General) || basis > 1)
        throw FormatError("read_operator: invalid header fields");

    const std::size_t payload_size = static_cast<std::size_t>(dim) * dim * 16;
    if (rd.remaining() != payload_size) throw FormatError("read_operator: payload size does not match dimension");
    const std::string_view payload = std::string_view(bytes).substr(kHeaderSize);
    const auto digest = sha256(payload);
    if (!std::equal(digest.begin(), digest.end(), reinterpret_cast<const std::uint8_t*>(stored.data())))
        throw FormatError("read_operator: checksum mismatch");

    Eigen::MatrixXcd m(dim, dim);
    for (std::uint32_t r = 0; r < dim; ++r)
        for (std::uint32_t c = 0; c < dim; ++c) m(r, c) = rd.complex();
    return ComplexOperator(std::move(m), static_cast<OperatorTag>(tag), static_cast<Basis>(basis));
}

} // namespace tribaker
