import { StudioApp } from "./app.js";

const app = new StudioApp();
void app.start();
