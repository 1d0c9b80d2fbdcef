export {
  DataError,
  loadMap,
  loadRunLog,
  loadTruth,
  parseMap,
  parseRunLog,
  parseTruth,
} from "./formats.js";
export type { MapLandmark, RunLog, RunRow, Truth, TruthPose } from "./formats.js";
export {
  FIGURE_KINDS,
  figureCovariance,
  figureError,
  figureMap,
  figureQuality,
  figureTrajectory,
  landmarkTraceSeries,
} from "./figures.js";
export type { FigureKind } from "./figures.js";
export { covarianceEllipse } from "./svg.js";
export { main, render } from "./cli.js";
