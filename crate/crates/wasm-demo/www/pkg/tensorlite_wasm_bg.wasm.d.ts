/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_training_free: (a: number, b: number) => void;
export const activation_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => void;
export const gradcheck: (a: number, b: number, c: number, d: number, e: number, f: number) => void;
export const gradcheck_names: (a: number) => void;
export const train: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => void;
export const training_accuracy: (a: number) => number;
export const training_grid: (a: number, b: number) => void;
export const training_grid_size: (a: number) => number;
export const training_hi: (a: number) => number;
export const training_labels: (a: number, b: number) => void;
export const training_lo: (a: number) => number;
export const training_losses: (a: number, b: number) => void;
export const training_points: (a: number, b: number) => void;
export const __wbindgen_add_to_stack_pointer: (a: number) => number;
export const __wbindgen_export: (a: number, b: number) => number;
export const __wbindgen_export2: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_export3: (a: number, b: number, c: number) => void;
