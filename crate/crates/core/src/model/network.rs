use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;

use super::config::{ArchitectureConfig, ConcatScheme};
use super::data::{GraphOperator, PreparedSample};
use crate::error::{Error, Result};
use crate::landmarks::Channel;
use crate::nn::{softmax_rows, DenseParam, HyperConvLayer, Mode, ParamRef, Parameterized};
use crate::spectral::LaplacianOperator;

/// Stacked per-vertex inputs of a batch.
#[derive(Debug, Clone)]
pub struct BatchInputs {
    pub color: Array2<f64>,
    pub depth: Option<Array2<f64>>,
    pub rows: Vec<usize>,
}

impl BatchInputs {
    pub fn from_samples(cfg: &ArchitectureConfig, samples: &[&PreparedSample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let center = cfg.preprocess.center_channels;
        let stack = |cs: &[Channel]| -> Result<Array2<f64>> {
            let parts = samples
                .iter()
                .map(|s| {
                    let mut x = s.points.select_channels(cs)?;
                    if center {
                        let mean = x.mean_axis(Axis(0)).expect("non-empty sample");
                        x -= &mean;
                    }
                    Ok(x)
                })
                .collect::<Result<Vec<_>>>()?;
            let views: Vec<ArrayView2<'_, f64>> = parts.iter().map(|p| p.view()).collect();
            Ok(concatenate(Axis(0), &views).expect("equal channel counts"))
        };
        let color = stack(cfg.input_channels.color())?;
        let depth = if cfg.use_depth_branch() {
            Some(stack(&[Channel::Depth])?)
        } else {
            None
        };
        Ok(Self {
            color,
            depth,
            rows: samples.iter().map(|s| s.n_vertices()).collect(),
        })
    }
}

/// Builds every sample's Laplacian for one batch.
pub fn batch_operators<'a>(samples: &[&'a PreparedSample]) -> Result<Vec<GraphOperator<'a>>> {
    samples.iter().map(|s| s.operator()).collect()
}

#[derive(Debug, Clone)]
struct NetCache {
    rows: Vec<usize>,
    mlp_inputs: Vec<Array2<f64>>,
    mlp_outputs: Vec<Array2<f64>>,
}

/// Two-branch hypergraph convolutional classifier.
///
/// Each branch stacks hypergraph conv layers; the selected layer outputs of
/// both branches are concatenated per vertex, averaged over vertices and
/// classified by an MLP. Logit 1 is the genuine class.
#[derive(Debug, Clone)]
pub struct Hgcnn {
    pub config: ArchitectureConfig,
    pub color: Vec<HyperConvLayer>,
    pub depth: Vec<HyperConvLayer>,
    pub mlp: Vec<DenseParam>,
    cache: Option<NetCache>,
}

fn build_branch<R: Rng>(
    name: &str,
    f_in: usize,
    widths: &[usize],
    cfg: &ArchitectureConfig,
    rng: &mut R,
) -> Vec<HyperConvLayer> {
    let mut prev = f_in;
    widths
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let mut l = HyperConvLayer::new(format!("{name}.conv{}", i + 1), prev, w, cfg.chebyshev_k, cfg.batchnorm, rng);
            l.rescale = cfg.rescale_spectrum.then_some(2.0);
            prev = w;
            l
        })
        .collect()
}

impl Hgcnn {
    /// Xavier-initialised network; parameters are drawn colour branch first,
    /// then depth branch, then MLP.
    pub fn new<R: Rng>(config: ArchitectureConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let color = build_branch("color", config.input_channels.color().len(), &config.color_widths, &config, rng);
        let depth = if config.use_depth_branch() {
            build_branch("depth", 1, &config.depth_widths, &config, rng)
        } else {
            Vec::new()
        };
        let mut prev = config.pooled_dim();
        let mlp = config
            .mlp_widths
            .iter()
            .map(|&w| {
                let d = DenseParam::xavier(prev, w, rng);
                prev = w;
                d
            })
            .collect();
        Ok(Self {
            config,
            color,
            depth,
            mlp,
            cache: None,
        })
    }

    /// Sets every trainable parameter to zero (batch-norm scales included).
    pub fn zeroed(mut self) -> Self {
        self.visit("", &mut |p| {
            if p.grad.is_some() {
                p.value.iter_mut().for_each(|v| *v = 0.0);
            }
        });
        self
    }

    fn selected(&self, branch: &[HyperConvLayer]) -> std::ops::Range<usize> {
        match self.config.concat_scheme {
            ConcatScheme::LastLayer => branch.len().saturating_sub(1)..branch.len(),
            _ => 0..branch.len(),
        }
    }

    fn run_branch(
        layers: &mut [HyperConvLayer],
        ops: &[&dyn LaplacianOperator],
        x: ArrayView2<'_, f64>,
        mode: Mode,
    ) -> Result<Vec<Array2<f64>>> {
        let mut outs: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
        for layer in layers.iter_mut() {
            let y = match outs.last() {
                Some(prev) => layer.forward(ops, prev.view(), mode)?,
                None => layer.forward(ops, x.view(), mode)?,
            };
            outs.push(y);
        }
        Ok(outs)
    }

    /// Per-vertex concatenated features for the whole batch.
    fn conv_features(
        &mut self,
        ops: &[&dyn LaplacianOperator],
        inputs: &BatchInputs,
        mode: Mode,
    ) -> Result<(Vec<Array2<f64>>, Vec<Array2<f64>>)> {
        let color = Self::run_branch(&mut self.color, ops, inputs.color.view(), mode)?;
        let depth = match &inputs.depth {
            Some(d) if !self.depth.is_empty() => Self::run_branch(&mut self.depth, ops, d.view(), mode)?,
            None if self.depth.is_empty() => Vec::new(),
            _ => {
                return Err(Error::Shape {
                    layer: "depth".into(),
                    detail: "depth input does not match the depth branch".into(),
                })
            }
        };
        Ok((color, depth))
    }

    /// Logits for a batch given its graph operators.
    pub fn forward_with(
        &mut self,
        ops: &[&dyn LaplacianOperator],
        inputs: &BatchInputs,
        mode: Mode,
    ) -> Result<Array2<f64>> {
        let (color, depth) = self.conv_features(ops, inputs, mode)?;
        let mut picked: Vec<ArrayView2<'_, f64>> = Vec::new();
        picked.extend(color[self.selected(&self.color)].iter().map(|a| a.view()));
        picked.extend(depth[self.selected(&self.depth)].iter().map(|a| a.view()));
        let concat = concatenate(Axis(1), &picked).expect("equal row counts");

        let b = inputs.rows.len();
        let mut pooled = Array2::zeros((b, concat.ncols()));
        let mut start = 0;
        for (i, &n) in inputs.rows.iter().enumerate() {
            let mean = concat.slice(s![start..start + n, ..]).mean_axis(Axis(0)).expect("non-empty sample");
            pooled.row_mut(i).assign(&mean);
            start += n;
        }
        if self.config.concat_scheme == ConcatScheme::Duplicate {
            pooled = concatenate(Axis(1), &[pooled.view(), pooled.view()]).unwrap();
        }
        if pooled.ncols() != self.mlp[0].f_in() {
            return Err(Error::Shape {
                layer: "mlp.0".into(),
                detail: format!("pooled width {} vs {}", pooled.ncols(), self.mlp[0].f_in()),
            });
        }

        let mut h = pooled;
        let mut mlp_inputs = Vec::with_capacity(self.mlp.len());
        let mut mlp_outputs = Vec::with_capacity(self.mlp.len());
        let last = self.mlp.len() - 1;
        for (i, layer) in self.mlp.iter().enumerate() {
            let mut z = layer.forward(h.view());
            if i != last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalBlowUp(format!("mlp.{i}")));
            }
            mlp_inputs.push(h);
            mlp_outputs.push(z.clone());
            h = z;
        }
        self.cache = Some(NetCache {
            rows: inputs.rows.clone(),
            mlp_inputs,
            mlp_outputs,
        });
        Ok(h)
    }

    /// Back-propagates `dlogits` through the batch seen by the last forward
    /// pass, accumulating gradients into every parameter.
    pub fn backward_with(&mut self, ops: &[&dyn LaplacianOperator], dlogits: ArrayView2<'_, f64>) -> Result<()> {
        let cache = self.cache.take().ok_or_else(|| Error::MissingCache("network".into()))?;
        let last = self.mlp.len() - 1;
        let mut d = dlogits.to_owned();
        for i in (0..self.mlp.len()).rev() {
            if i != last {
                ndarray::Zip::from(&mut d).and(&cache.mlp_outputs[i]).for_each(|g, &y| {
                    if y <= 0.0 {
                        *g = 0.0
                    }
                });
            }
            d = self.mlp[i].backward(cache.mlp_inputs[i].view(), d.view());
        }
        if self.config.concat_scheme == ConcatScheme::Duplicate {
            let half = d.ncols() / 2;
            d = &d.slice(s![.., ..half]) + &d.slice(s![.., half..]);
        }

        let total: usize = cache.rows.iter().sum();
        let mut dconcat = Array2::zeros((total, d.ncols()));
        let mut start = 0;
        for (i, &n) in cache.rows.iter().enumerate() {
            let row = d.row(i).mapv(|v| v / n as f64);
            dconcat.slice_mut(s![start..start + n, ..]).assign(&row);
            start += n;
        }

        let mut col = 0;
        let color_sel = self.selected(&self.color);
        let depth_sel = self.selected(&self.depth);
        let color_grads = Self::split_columns(&self.color, color_sel, &dconcat, &mut col);
        let depth_grads = Self::split_columns(&self.depth, depth_sel, &dconcat, &mut col);
        Self::branch_backward(&mut self.color, ops, color_grads)?;
        Self::branch_backward(&mut self.depth, ops, depth_grads)?;
        Ok(())
    }

    fn split_columns(
        layers: &[HyperConvLayer],
        selected: std::ops::Range<usize>,
        dconcat: &Array2<f64>,
        col: &mut usize,
    ) -> Vec<Option<Array2<f64>>> {
        layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                selected.contains(&i).then(|| {
                    let g = dconcat.slice(s![.., *col..*col + l.f_out()]).to_owned();
                    *col += l.f_out();
                    g
                })
            })
            .collect()
    }

    fn branch_backward(
        layers: &mut [HyperConvLayer],
        ops: &[&dyn LaplacianOperator],
        mut direct: Vec<Option<Array2<f64>>>,
    ) -> Result<()> {
        let mut from_above: Option<Array2<f64>> = None;
        for i in (0..layers.len()).rev() {
            let g = match (direct[i].take(), from_above.take()) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => continue,
            };
            let dx = layers[i].backward(ops, g.view())?;
            if i > 0 {
                from_above = Some(dx);
            }
        }
        Ok(())
    }

    /// Logits for prepared samples.
    pub fn forward(&mut self, samples: &[&PreparedSample], mode: Mode) -> Result<Array2<f64>> {
        let inputs = BatchInputs::from_samples(&self.config, samples)?;
        let ops = batch_operators(samples)?;
        let refs: Vec<&dyn LaplacianOperator> = ops.iter().map(|o| o as &dyn LaplacianOperator).collect();
        self.forward_with(&refs, &inputs, mode)
    }

    /// Genuine-class probabilities in inference mode.
    pub fn genuine_probabilities(&mut self, samples: &[&PreparedSample]) -> Result<Vec<f64>> {
        let logits = self.forward(samples, Mode::Eval)?;
        self.clear_caches();
        Ok(softmax_rows(logits.view()).column(1).to_vec())
    }

    /// Per-vertex features of one sample in inference mode: the raw inputs,
    /// then for each conv depth the outputs of all branches side by side.
    pub fn vertex_features(&mut self, sample: &PreparedSample) -> Result<Vec<Array2<f64>>> {
        let inputs = BatchInputs::from_samples(&self.config, &[sample])?;
        let op = sample.operator()?;
        let ops: [&dyn LaplacianOperator; 1] = [&op];
        let (color, depth) = self.conv_features(&ops, &inputs, Mode::Eval)?;
        self.clear_caches();
        let mut layers = Vec::new();
        let mut raw = vec![inputs.color.view()];
        if let Some(d) = &inputs.depth {
            raw.push(d.view());
        }
        layers.push(concatenate(Axis(1), &raw).unwrap());
        for i in 0..color.len().max(depth.len()) {
            let parts: Vec<ArrayView2<'_, f64>> = color.get(i).into_iter().chain(depth.get(i)).map(|a| a.view()).collect();
            layers.push(concatenate(Axis(1), &parts).unwrap());
        }
        Ok(layers)
    }

    pub fn clear_caches(&mut self) {
        self.cache = None;
        self.color.iter_mut().chain(self.depth.iter_mut()).for_each(|l| l.clear_cache());
    }
}

impl Parameterized for Hgcnn {
    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(ParamRef<'_>)) {
        let p = if prefix.is_empty() { String::new() } else { format!("{prefix}.") };
        for (i, l) in self.color.iter_mut().enumerate() {
            l.visit(&format!("{p}color.conv{}", i + 1), f);
        }
        for (i, l) in self.depth.iter_mut().enumerate() {
            l.visit(&format!("{p}depth.conv{}", i + 1), f);
        }
        for (i, l) in self.mlp.iter_mut().enumerate() {
            l.visit(&format!("{p}mlp.{i}"), f);
        }
    }
}
