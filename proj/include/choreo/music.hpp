#pragma once

#include "choreo/tensor.hpp"

#include <vector>

namespace choreo {

/// L frames x 35 conditioning channels:
///   [0] envelope, [1..20] spectral proxies, [21..32] chroma proxies,
///   [33] beat indicator, [34] peak indicator.
class MusicTrack {
public:
    static constexpr int kChannels = 35;
    static constexpr int kEnvelope = 0;
    static constexpr int kSpectralBegin = 1;
    static constexpr int kSpectralCount = 20;
    static constexpr int kChromaBegin = 21;
    static constexpr int kChromaCount = 12;
    static constexpr int kBeat = 33;
    static constexpr int kPeak = 34;

    explicit MusicTrack(int frames);
    explicit MusicTrack(Mat features);

    int frames() const { return static_cast<int>(features_.rows()); }
    const Mat& features() const { return features_; }
    Mat& features() { return features_; }

    /// Frames whose beat channel is set.
    std::vector<int> beat_frames() const;

    /// Frames [start, start + count).
    MusicTrack slice(int start, int count) const;

    /// Throws FormatError when the channel count or binary channels are wrong.
    void validate() const;

    bool operator==(const MusicTrack& o) const { return features_ == o.features_; }

private:
    Mat features_;
};

}  // namespace choreo
