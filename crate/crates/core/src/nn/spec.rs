use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Fully connected; flattens its input.
    Dense { outputs: usize },
    /// Stride-1 convolution with zero "same" padding over [C, H, W].
    Conv2d { out_channels: usize, kernel: usize },
    Relu,
    /// Non-overlapping 2×2 max-pool over [C, H, W].
    MaxPool2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>) -> Result<Self> {
        let spec = Self { input_shape, layers };
        spec.shapes()?;
        Ok(spec)
    }

    /// Multi-layer perceptron with ReLU between dense layers.
    pub fn mlp(inputs: usize, hidden: &[usize], outputs: usize) -> Result<Self> {
        let mut layers = Vec::new();
        for &h in hidden {
            layers.push(LayerSpec::Dense { outputs: h });
            layers.push(LayerSpec::Relu);
        }
        layers.push(LayerSpec::Dense { outputs });
        Self::new(vec![inputs], layers)
    }

    /// Activation shape entering each layer, plus the final output shape.
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>> {
        if self.input_shape.is_empty() || self.input_shape.contains(&0) {
            return Err(Error::Shape(format!("input shape {:?}", self.input_shape)));
        }
        let mut shapes = vec![self.input_shape.clone()];
        for (i, layer) in self.layers.iter().enumerate() {
            let cur = shapes.last().unwrap();
            let next = match *layer {
                LayerSpec::Dense { outputs } if outputs > 0 => vec![outputs],
                LayerSpec::Conv2d { out_channels, kernel } if out_channels > 0 && kernel % 2 == 1 => match cur[..] {
                    [_, h, w] => vec![out_channels, h, w],
                    _ => return Err(Error::Shape(format!("layer {i}: conv needs [C,H,W], got {cur:?}"))),
                },
                LayerSpec::Relu => cur.clone(),
                LayerSpec::MaxPool2 => match cur[..] {
                    [c, h, w] if h % 2 == 0 && w % 2 == 0 => vec![c, h / 2, w / 2],
                    _ => return Err(Error::Shape(format!("layer {i}: pool needs even [C,H,W], got {cur:?}"))),
                },
                _ => return Err(Error::Shape(format!("layer {i}: invalid {layer:?}"))),
            };
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn output_len(&self) -> usize {
        self.shapes().map(|s| s.last().unwrap().iter().product()).unwrap_or(0)
    }

    /// (name, shape) of every trainable tensor, in storage order.
    pub fn param_shapes(&self) -> Result<Vec<(String, Vec<usize>)>> {
        let shapes = self.shapes()?;
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let input = &shapes[i];
            match *layer {
                LayerSpec::Dense { outputs } => {
                    out.push((format!("layer{i}.weight"), vec![outputs, input.iter().product()]));
                    out.push((format!("layer{i}.bias"), vec![outputs]));
                }
                LayerSpec::Conv2d { out_channels, kernel } => {
                    out.push((format!("layer{i}.weight"), vec![out_channels, input[0], kernel, kernel]));
                    out.push((format!("layer{i}.bias"), vec![out_channels]));
                }
                LayerSpec::Relu | LayerSpec::MaxPool2 => {}
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cnn_shapes() {
        let spec = NetworkSpec::new(
            vec![1, 16, 16],
            vec![
                LayerSpec::Conv2d { out_channels: 16, kernel: 3 },
                LayerSpec::Relu,
                LayerSpec::MaxPool2,
                LayerSpec::Dense { outputs: 10 },
            ],
        )
        .unwrap();
        let s = spec.shapes().unwrap();
        assert_eq!(s[3], vec![16, 8, 8]);
        assert_eq!(spec.output_len(), 10);
        let p = spec.param_shapes().unwrap();
        assert_eq!(p[0], ("layer0.weight".to_string(), vec![16, 1, 3, 3]));
        assert_eq!(p[2].1, vec![10, 1024]);
    }

    #[test]
    fn incompatible_layers_are_rejected() {
        assert!(NetworkSpec::new(vec![5], vec![LayerSpec::MaxPool2]).is_err());
        assert!(NetworkSpec::new(vec![1, 3, 3], vec![LayerSpec::MaxPool2]).is_err());
        assert!(NetworkSpec::new(vec![1, 4, 4], vec![LayerSpec::Conv2d { out_channels: 2, kernel: 2 }]).is_err());
        assert!(NetworkSpec::new(vec![3], vec![LayerSpec::Dense { outputs: 0 }]).is_err());
    }
}
