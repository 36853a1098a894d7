use alloc::collections::VecDeque;
use alloc::sync::Arc;

use super::view_filter::{view_filter_accept, ViewFilterConfig, ViewFilterReport};
use super::{Keyframe, PipelineError};
use crate::geometry::EquirectCamera;

/// Three consecutive accepted keyframes; the middle one is the reference.
#[derive(Debug, Clone)]
pub struct DepthJob {
    pub reference: Arc<Keyframe>,
    pub neighbors: [Arc<Keyframe>; 2],
}

/// What happened to one submitted keyframe.
#[derive(Debug, Clone)]
pub struct GateOutcome {
    pub accepted: bool,
    /// `None` for the first keyframe, which bypasses the filter
    pub filter: Option<ViewFilterReport>,
    pub job: Option<DepthJob>,
}

/// Keyframe ingestion: ordering check, view filter and the sliding stereo
/// buffer.
#[derive(Debug, Clone)]
pub struct KeyframeGate {
    camera: EquirectCamera,
    config: ViewFilterConfig,
    last_id: Option<u64>,
    buffer: VecDeque<Arc<Keyframe>>,
    submitted: usize,
    accepted: usize,
}

impl KeyframeGate {
    pub fn new(camera: EquirectCamera, config: ViewFilterConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(KeyframeGate {
            camera,
            config,
            last_id: None,
            buffer: VecDeque::with_capacity(3),
            submitted: 0,
            accepted: 0,
        })
    }

    pub fn submitted(&self) -> usize {
        self.submitted
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }

    /// Share of submitted keyframes that passed, 0 before any submission.
    pub fn acceptance_rate(&self) -> f64 {
        if self.submitted == 0 {
            0.0
        } else {
            self.accepted as f64 / self.submitted as f64
        }
    }

    /// Filters `keyframe` against the newest accepted one. Once three
    /// keyframes are buffered every acceptance emits a job for the newest
    /// triple. Ids must strictly increase, rejected keyframes included.
    pub fn submit(&mut self, keyframe: Keyframe) -> Result<GateOutcome, PipelineError> {
        if let Some(prev) = self.last_id {
            if keyframe.id <= prev {
                return Err(PipelineError::OutOfOrder {
                    previous: prev,
                    got: keyframe.id,
                });
            }
        }
        let (w, h) = (keyframe.image.width(), keyframe.image.height());
        if (w, h) != (self.camera.width(), self.camera.height()) {
            return Err(PipelineError::ImageSize {
                id: keyframe.id,
                expected: (self.camera.width(), self.camera.height()),
                got: (w, h),
            });
        }
        self.last_id = Some(keyframe.id);
        self.submitted += 1;
        let filter = self
            .buffer
            .back()
            .map(|latest| view_filter_accept(&keyframe, latest, &self.config));
        let accepted = filter.as_ref().is_none_or(|r| r.accepted);
        if !accepted {
            return Ok(GateOutcome {
                accepted,
                filter,
                job: None,
            });
        }
        self.accepted += 1;
        if self.buffer.len() == 3 {
            self.buffer.pop_front();
        }
        self.buffer.push_back(Arc::new(keyframe));
        let job = (self.buffer.len() == 3).then(|| DepthJob {
            reference: self.buffer[1].clone(),
            neighbors: [self.buffer[0].clone(), self.buffer[2].clone()],
        });
        Ok(GateOutcome {
            accepted,
            filter,
            job,
        })
    }
}
