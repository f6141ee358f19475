/** Wire types for the four service endpoints (shapes match the JSON exactly). */

export interface GraphJson {
  atoms: string[];
  bonds: [number, number, number][];
}

export interface TargetedHead {
  dim: number;
  property: string;
  coefficients: number[];
  coefficients_hex: string[];
  noise_sigma: number;
  mean: number;
  std: number;
  source: string;
}

export interface ModelInfo {
  latent_dim: number;
  targeted: TargetedHead[];
  atom_alphabet: string[];
  bond_alphabet: number[];
  size_limits: { min_atoms: number; max_atoms: number };
}

export interface SeedResponse {
  session: string;
  n: number;
  zbar: number[];
}

export interface DecodeResponse {
  graph: GraphJson;
  smiles: string;
  computed_properties: Record<string, number>;
  predicted_properties: Record<string, number>;
  zbar: number[];
}

export interface ApiError {
  code: number;
  message: string;
}
