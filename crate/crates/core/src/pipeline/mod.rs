pub struct PipelineConfig;
