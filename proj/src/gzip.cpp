#include "koos/gzip.hpp"

#include <cstring>
#include <zlib.h>

#include "koos/error.hpp"

namespace koos::gz {

std::vector<std::uint8_t> compress(std::span<const std::uint8_t> bytes, int level) {
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    if (deflateInit2(&zs, level, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        fail(Errc::io_error, "gzip: deflateInit2 failed");

    gz_header header;
    std::memset(&header, 0, sizeof(header));
    header.time = 0;
    header.os = 3; // Unix, fixed regardless of host
    deflateSetHeader(&zs, &header);

    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(bytes.size())));
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) fail(Errc::io_error, "gzip: deflate failed");
    out.resize(out.size() - zs.avail_out);
    return out;
}

std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> bytes) {
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    if (inflateInit2(&zs, 15 + 16) != Z_OK) fail(Errc::io_error, "gzip: inflateInit2 failed");

    std::vector<std::uint8_t> out;
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<Bytef*>(bytes.data());
    zs.avail_in = static_cast<uInt>(bytes.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            if (rc == Z_BUF_ERROR) fail(Errc::truncated_data, "gzip: stream ends early");
            fail(Errc::io_error, "gzip: corrupt stream");
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            // Consumed all input without reaching the stream trailer.
            inflateEnd(&zs);
            fail(Errc::truncated_data, "gzip: stream ends early");
        }
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

} // namespace koos::gz
