// vcq — video constant-QP codec tool.
//
// Subcommands:
//   vcq version
//   vcq encode --in <png_dir> --out <file.mp4> --qp <0..51> [--fps <num>]
//   vcq decode --in <file.mp4> --out <png_dir>
//
// Encoding is H.264 (libx264) in constant-QP mode with a single thread so the
// bitstream is reproducible for a fixed (input, qp, encoder version).

extern "C" {
#include <libavcodec/avcodec.h>
#include <libavformat/avformat.h>
#include <libavutil/avutil.h>
#include <libavutil/imgutils.h>
#include <libavutil/opt.h>
}

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsvr/media/clip.hpp"
#include "dsvr/media/image.hpp"
#include "dsvr/version.hpp"

namespace {

using dsvr::media::FrameClip;
using dsvr::media::Image;

[[noreturn]] void av_fail(const std::string& what, int err) {
    char buf[AV_ERROR_MAX_STRING_SIZE] = {};
    av_strerror(err, buf, sizeof(buf));
    throw std::runtime_error(what + ": " + buf);
}

std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// BT.601 limited-range RGB -> YUV420p with 2x2 box chroma subsampling.
void rgb_to_yuv420(const Image& img, AVFrame* frame) {
    const int h = img.h, w = img.w;
    std::vector<double> cb(static_cast<std::size_t>(h) * static_cast<std::size_t>(w));
    std::vector<double> cr(cb.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = (static_cast<std::size_t>(y) * w + x) * 3;
            const double r = img.data[p] / 255.0;
            const double g = img.data[p + 1] / 255.0;
            const double b = img.data[p + 2] / 255.0;
            const double luma = 0.299 * r + 0.587 * g + 0.114 * b;
            frame->data[0][y * frame->linesize[0] + x] = clamp_u8(16.0 + 219.0 * luma);
            cb[static_cast<std::size_t>(y) * w + x] = 128.0 + 224.0 * 0.564 * (b - luma);
            cr[static_cast<std::size_t>(y) * w + x] = 128.0 + 224.0 * 0.713 * (r - luma);
        }
    }
    for (int y = 0; y < h / 2; ++y) {
        for (int x = 0; x < w / 2; ++x) {
            const std::size_t i00 = static_cast<std::size_t>(2 * y) * w + 2 * x;
            const std::size_t i01 = i00 + 1;
            const std::size_t i10 = i00 + static_cast<std::size_t>(w);
            const std::size_t i11 = i10 + 1;
            frame->data[1][y * frame->linesize[1] + x] =
                clamp_u8((cb[i00] + cb[i01] + cb[i10] + cb[i11]) / 4.0);
            frame->data[2][y * frame->linesize[2] + x] =
                clamp_u8((cr[i00] + cr[i01] + cr[i10] + cr[i11]) / 4.0);
        }
    }
}

// Inverse conversion; chroma upsampled by replication.
Image yuv420_to_rgb(const AVFrame* frame) {
    Image img(frame->height, frame->width);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            const double Y = frame->data[0][y * frame->linesize[0] + x];
            const double Cb = frame->data[1][(y / 2) * frame->linesize[1] + x / 2];
            const double Cr = frame->data[2][(y / 2) * frame->linesize[2] + x / 2];
            const double luma = (Y - 16.0) / 219.0;
            const double bd = (Cb - 128.0) / (224.0 * 0.564);
            const double rd = (Cr - 128.0) / (224.0 * 0.713);
            const double r = luma + rd;
            const double b = luma + bd;
            const double g = (luma - 0.299 * r - 0.114 * b) / 0.587;
            const std::size_t p = (static_cast<std::size_t>(y) * img.w + x) * 3;
            img.data[p] = clamp_u8(255.0 * r);
            img.data[p + 1] = clamp_u8(255.0 * g);
            img.data[p + 2] = clamp_u8(255.0 * b);
        }
    }
    return img;
}

int run_encode(const std::string& in_dir, const std::string& out_path, int qp, double fps) {
    const FrameClip clip = dsvr::media::read_frames(in_dir, fps);
    if (clip.width() % 2 != 0 || clip.height() % 2 != 0) {
        throw std::runtime_error("frame dimensions must be even for 4:2:0 encoding, got " +
                                 std::to_string(clip.width()) + "x" + std::to_string(clip.height()));
    }
    if (qp < 0 || qp > 51) throw std::runtime_error("qp must be in [0, 51]");

    const AVCodec* codec = avcodec_find_encoder_by_name("libx264");
    if (!codec) throw std::runtime_error("libx264 encoder not available in this libavcodec build");

    AVFormatContext* fmt = nullptr;
    int err = avformat_alloc_output_context2(&fmt, nullptr, "mp4", out_path.c_str());
    if (err < 0) av_fail("cannot allocate mp4 muxer", err);

    AVCodecContext* enc = avcodec_alloc_context3(codec);
    const AVRational framerate = av_d2q(fps, 100000);
    enc->width = clip.width();
    enc->height = clip.height();
    enc->pix_fmt = AV_PIX_FMT_YUV420P;
    enc->time_base = av_inv_q(framerate);
    enc->framerate = framerate;
    enc->thread_count = 1;  // single-threaded => reproducible bitstream
    if (fmt->oformat->flags & AVFMT_GLOBALHEADER) enc->flags |= AV_CODEC_FLAG_GLOBAL_HEADER;
    av_opt_set_int(enc->priv_data, "qp", qp, 0);  // constant-QP rate control
    av_opt_set(enc->priv_data, "preset", "medium", 0);

    err = avcodec_open2(enc, codec, nullptr);
    if (err < 0) av_fail("cannot open libx264 encoder", err);

    AVStream* stream = avformat_new_stream(fmt, nullptr);
    stream->time_base = enc->time_base;
    avcodec_parameters_from_context(stream->codecpar, enc);

    err = avio_open(&fmt->pb, out_path.c_str(), AVIO_FLAG_WRITE);
    if (err < 0) av_fail("cannot open output file " + out_path, err);
    err = avformat_write_header(fmt, nullptr);
    if (err < 0) av_fail("cannot write mp4 header", err);

    AVFrame* frame = av_frame_alloc();
    frame->format = enc->pix_fmt;
    frame->width = enc->width;
    frame->height = enc->height;
    av_frame_get_buffer(frame, 0);
    AVPacket* pkt = av_packet_alloc();

    auto drain = [&](AVFrame* f) {
        int serr = avcodec_send_frame(enc, f);
        if (serr < 0) av_fail("encoder rejected frame", serr);
        for (;;) {
            const int rerr = avcodec_receive_packet(enc, pkt);
            if (rerr == AVERROR(EAGAIN) || rerr == AVERROR_EOF) break;
            if (rerr < 0) av_fail("encoder error", rerr);
            // libx264 leaves packet durations at zero; without an explicit
            // duration the mp4 muxer under-reports the track length and the
            // demuxer then flags the final sample for discard, silently
            // truncating the decoded clip by one frame.
            if (pkt->duration == 0) pkt->duration = 1;
            av_packet_rescale_ts(pkt, enc->time_base, stream->time_base);
            pkt->stream_index = stream->index;
            const int werr = av_interleaved_write_frame(fmt, pkt);
            if (werr < 0) av_fail("cannot write packet", werr);
        }
    };

    for (int i = 0; i < clip.frame_count(); ++i) {
        av_frame_make_writable(frame);
        rgb_to_yuv420(clip.frames[static_cast<std::size_t>(i)], frame);
        frame->pts = i;
        drain(frame);
    }
    drain(nullptr);  // flush

    av_write_trailer(fmt);
    avio_closep(&fmt->pb);
    av_packet_free(&pkt);
    av_frame_free(&frame);
    avcodec_free_context(&enc);
    avformat_free_context(fmt);
    std::fprintf(stderr, "encoded %d frames to %s (qp=%d)\n", clip.frame_count(), out_path.c_str(),
                 qp);
    return 0;
}

int run_decode(const std::string& in_path, const std::string& out_dir) {
    AVFormatContext* fmt = nullptr;
    int err = avformat_open_input(&fmt, in_path.c_str(), nullptr, nullptr);
    if (err < 0) av_fail("cannot open " + in_path, err);
    err = avformat_find_stream_info(fmt, nullptr);
    if (err < 0) av_fail("cannot read stream info", err);

    const int stream_idx = av_find_best_stream(fmt, AVMEDIA_TYPE_VIDEO, -1, -1, nullptr, 0);
    if (stream_idx < 0) throw std::runtime_error("no video stream in " + in_path);
    AVStream* stream = fmt->streams[stream_idx];

    const AVCodec* codec = avcodec_find_decoder(stream->codecpar->codec_id);
    if (!codec) throw std::runtime_error("no decoder for stream codec");
    AVCodecContext* dec = avcodec_alloc_context3(codec);
    avcodec_parameters_to_context(dec, stream->codecpar);
    dec->thread_count = 1;
    err = avcodec_open2(dec, codec, nullptr);
    if (err < 0) av_fail("cannot open decoder", err);

    FrameClip clip;
    AVPacket* pkt = av_packet_alloc();
    AVFrame* frame = av_frame_alloc();

    auto receive_all = [&]() {
        for (;;) {
            const int rerr = avcodec_receive_frame(dec, frame);
            if (rerr == AVERROR(EAGAIN) || rerr == AVERROR_EOF) break;
            if (rerr < 0) av_fail("decoder error", rerr);
            if (frame->format != AV_PIX_FMT_YUV420P && frame->format != AV_PIX_FMT_YUVJ420P) {
                throw std::runtime_error("unexpected pixel format " +
                                         std::to_string(frame->format) + " (expected yuv420p)");
            }
            clip.frames.push_back(yuv420_to_rgb(frame));
        }
    };

    while (av_read_frame(fmt, pkt) >= 0) {
        if (pkt->stream_index == stream_idx) {
            err = avcodec_send_packet(dec, pkt);
            if (err < 0) av_fail("decoder rejected packet", err);
            receive_all();
        }
        av_packet_unref(pkt);
    }
    avcodec_send_packet(dec, nullptr);
    receive_all();

    av_frame_free(&frame);
    av_packet_free(&pkt);
    avcodec_free_context(&dec);
    avformat_close_input(&fmt);

    if (clip.frames.empty()) throw std::runtime_error("no frames decoded from " + in_path);
    dsvr::media::write_frames(out_dir, clip);
    std::fprintf(stderr, "decoded %d frames from %s\n", clip.frame_count(), in_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    av_log_set_level(AV_LOG_ERROR);

    CLI::App app{"vcq — constant-QP H.264 encode/decode tool"};
    app.require_subcommand(1);

    auto* version_cmd = app.add_subcommand("version", "print version string");

    std::string enc_in, enc_out;
    int qp = 28;
    double fps = 30.0;
    auto* encode_cmd = app.add_subcommand("encode", "encode a PNG directory to MP4");
    encode_cmd->add_option("--in", enc_in, "input PNG directory")->required();
    encode_cmd->add_option("--out", enc_out, "output MP4 path")->required();
    encode_cmd->add_option("--qp", qp, "constant quantization parameter")->required();
    encode_cmd->add_option("--fps", fps, "frame rate");

    std::string dec_in, dec_out;
    auto* decode_cmd = app.add_subcommand("decode", "decode an MP4 to a PNG directory");
    decode_cmd->add_option("--in", dec_in, "input MP4 path")->required();
    decode_cmd->add_option("--out", dec_out, "output PNG directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (version_cmd->parsed()) {
            std::printf("vcq %s (libavcodec %d.%d.%d, libavformat %d.%d.%d, libx264)\n",
                        dsvr::version(), LIBAVCODEC_VERSION_MAJOR, LIBAVCODEC_VERSION_MINOR,
                        LIBAVCODEC_VERSION_MICRO, LIBAVFORMAT_VERSION_MAJOR,
                        LIBAVFORMAT_VERSION_MINOR, LIBAVFORMAT_VERSION_MICRO);
            return 0;
        }
        if (encode_cmd->parsed()) return run_encode(enc_in, enc_out, qp, fps);
        if (decode_cmd->parsed()) return run_decode(dec_in, dec_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "vcq: %s\n", e.what());
        return 1;
    }
    return 2;
}
