use rand::Rng;

/// Frame range `[start, end)` of each of `segments` contiguous near-equal parts.
/// The remainder goes to the earliest segments.
pub fn segment_bounds(frame_count: usize, segments: usize) -> Vec<(usize, usize)> {
    let base = frame_count / segments;
    let rem = frame_count % segments;
    let mut start = 0;
    (0..segments)
        .map(|t| {
            let len = base + usize::from(t < rem);
            let b = (start, start + len);
            start += len;
            b
        })
        .collect()
}

/// Clip start frames for each segment.
///
/// Within a segment a start `s` is drawn uniformly so that `s, s+interval, …`
/// all fit; when the segment is too short the offset is 0 and starts past the
/// segment's last frame are clamped to it.
pub fn sample_segments<R: Rng + ?Sized>(
    frame_count: usize,
    segments: usize,
    clips_per_segment: usize,
    clip_interval: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let frame_count = frame_count.max(1);
    let span = 1 + clips_per_segment.saturating_sub(1) * clip_interval;
    segment_bounds(frame_count, segments)
        .into_iter()
        .map(|(start, end)| {
            // Empty segments (fewer frames than segments) fall back to the nearest real frame.
            let last = end.max(start + 1).min(frame_count) - 1;
            let first = start.min(last);
            let len = last - first + 1;
            let offset = if len >= span {
                rng.random_range(0..=len - span)
            } else {
                0
            };
            (0..clips_per_segment)
                .map(|j| (first + offset + j * clip_interval).min(last))
                .collect()
        })
        .collect()
}
