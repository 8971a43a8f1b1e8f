/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_parcellation_free: (a: number, b: number) => void;
export const basis_curves: (a: number, b: number, c: number) => [number, number, number, number];
export const parcellation_clusters: (a: number, b: number) => [number, number];
export const parcellation_counts: (a: number) => [number, number];
export const parcellation_faces: (a: number) => [number, number];
export const parcellation_labels: (a: number) => [number, number];
export const parcellation_new: (a: number, b: number, c: bigint) => [number, number, number];
export const parcellation_positions: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
