# Core tests package 